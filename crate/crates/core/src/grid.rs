//! Uniform 1-D grids, piecewise-constant fields on them, and the norms
//! (windowed L¹, L∞, total variation) used by every estimate in the crate.

use crate::error::{Error, Result};

/// Uniform mesh of `n_cells` cells on `[x_left, x_right)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
    dx: f64,
}

impl Grid {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if !x_left.is_finite() || !x_right.is_finite() {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if n_cells == 0 {
            return Err(Error::InvalidGrid("n_cells must be positive".into()));
        }
        if x_right <= x_left {
            return Err(Error::InvalidGrid(format!(
                "x_right ({x_right}) must exceed x_left ({x_left})"
            )));
        }
        Ok(Self {
            x_left,
            x_right,
            n_cells,
            dx: (x_right - x_left) / n_cells as f64,
        })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Left edge of cell `i`; `edge(n_cells)` is the right boundary.
    #[inline]
    pub fn edge(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.x_right
        } else {
            self.x_left + i as f64 * self.dx
        }
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_left + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.center(i))
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn locate(&self, x: f64) -> usize {
        let raw = ((x - self.x_left) / self.dx).floor();
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.n_cells - 1)
        }
    }

    /// Checks that `[lo, hi]` lies inside the grid, allowing for rounding
    /// in the endpoints.
    pub fn check_window(&self, window: (f64, f64)) -> Result<()> {
        let (lo, hi) = window;
        let slack = 1e-12 * (self.x_right - self.x_left).max(1.0);
        if !(lo <= hi) || lo < self.x_left - slack || hi > self.x_right + slack {
            return Err(Error::WindowOutsideGrid {
                lo,
                hi,
                x_left: self.x_left,
                x_right: self.x_right,
            });
        }
        Ok(())
    }
}

/// Cell averages of a piecewise-constant function over a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    grid: Grid,
    values: Vec<f64>,
}

impl CellField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.n_cells(),
                values.len()
            )));
        }
        if let Some((cell, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: 0,
                time: 0.0,
                cell,
                value,
            });
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values already known to be valid.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        Self { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self::from_parts(grid, vec![value; grid.n_cells()])
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at the cell centers.
    pub fn from_centers(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.centers().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn same_grid(&self, other: &CellField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Pointwise product, e.g. `ρ = v·q`.
    pub fn product(&self, other: &CellField) -> Result<CellField> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Self::from_parts(self.grid, values))
    }

    pub fn difference(&self, other: &CellField) -> Result<CellField> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_parts(self.grid, values))
    }

    pub fn scaled(&self, factor: f64) -> CellField {
        Self::from_parts(self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ f dx` over the whole grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    /// The piecewise-constant function this field represents.
    pub fn to_spec(&self) -> PiecewiseConstantSpec {
        PiecewiseConstantSpec {
            breakpoints: (1..self.grid.n_cells())
                .map(|i| self.grid.edge(i))
                .collect(),
            levels: self.values.clone(),
        }
    }
}

/// A piecewise-constant function on ℝ: `levels[k]` holds on
/// `[breakpoints[k-1], breakpoints[k])`, with the outer levels extending to ±∞.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantSpec {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl PiecewiseConstantSpec {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidSpec(format!(
                "{} breakpoints need {} levels, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                levels.len()
            )));
        }
        if breakpoints.iter().chain(&levels).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("all entries must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            levels,
        })
    }

    pub fn constant(level: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            levels: vec![level],
        }
    }

    /// `height` on `[a, b)`, zero elsewhere.
    pub fn indicator(a: f64, b: f64, height: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![0.0, height, 0.0])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Value at `x` (right-continuous at breakpoints).
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= x);
        self.levels[k]
    }

    pub fn min_level(&self) -> f64 {
        self.levels.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_level(&self) -> f64 {
        self.levels
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Total variation of the function on ℝ.
    pub fn total_variation(&self) -> f64 {
        self.levels.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    /// Requires every level to be at least `v_min > 0`, as needed of a speed.
    pub fn check_speed(&self, v_min: f64) -> Result<()> {
        if !(v_min > 0.0) {
            return Err(Error::InvalidSpec("v_min must be positive".into()));
        }
        match self.levels.iter().find(|&&l| l < v_min) {
            Some(l) => Err(Error::InvalidSpec(format!(
                "speed level {l} is below v_min = {v_min}; the speed must be bounded away from zero"
            ))),
            None => Ok(()),
        }
    }

    /// One-sided Lipschitz constant from above: zero if the function never
    /// jumps upwards, infinite otherwise.
    pub fn osl_constant(&self) -> f64 {
        if self.levels.windows(2).any(|w| w[1] > w[0]) {
            f64::INFINITY
        } else {
            0.0
        }
    }

    /// Every breakpoint of `self` and `other`, merged and deduplicated.
    pub(crate) fn merged_breakpoints(&self, other: &Self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        all
    }
}

/// Exact cell averages of `spec` on `grid`.
pub fn sample(spec: &PiecewiseConstantSpec, grid: &Grid) -> CellField {
    let bps = &spec.breakpoints;
    let levels = &spec.levels;
    // first piece that can intersect cell 0
    let mut k = bps.partition_point(|&b| b <= grid.x_left());
    let mut values = Vec::with_capacity(grid.n_cells());
    for i in 0..grid.n_cells() {
        let (a, b) = (grid.edge(i), grid.edge(i + 1));
        if k == bps.len() || bps[k] >= b {
            values.push(levels[k]);
            continue;
        }
        let mut acc = 0.0;
        let mut lo = a;
        while k < bps.len() && bps[k] < b {
            acc += levels[k] * (bps[k] - lo);
            lo = bps[k];
            k += 1;
        }
        acc += levels[k] * (b - lo);
        values.push(acc / (b - a));
    }
    CellField::from_parts(*grid, values)
}

/// `Σ |f_i| · |cell_i ∩ window|`.
pub fn norm_l1(f: &CellField, window: (f64, f64)) -> Result<f64> {
    let grid = f.grid();
    grid.check_window(window)?;
    let (lo, hi) = window;
    if hi <= lo {
        return Ok(0.0);
    }
    let first = grid.locate(lo);
    let last = grid.locate(hi);
    let mut acc = 0.0;
    for i in first..=last {
        let overlap = grid.edge(i + 1).min(hi) - grid.edge(i).max(lo);
        if overlap > 0.0 {
            acc += f.values()[i].abs() * overlap;
        }
    }
    Ok(acc)
}

pub fn norm_linf(f: &CellField) -> f64 {
    f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Discrete total variation `Σ |f_{i+1} - f_i|`.
pub fn tv(f: &CellField) -> f64 {
    tv_slice(f.values())
}

pub(crate) fn tv_slice(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Discrete Epanechnikov weights `1 - (k dx / ε)²` for the offsets `k`
/// inside the support, normalized to unit sum. Index `r` is offset zero.
fn epanechnikov_weights(dx: f64, epsilon: f64) -> Vec<f64> {
    let radius = (epsilon / dx).floor() as usize;
    let mut weights: Vec<f64> = (0..=2 * radius)
        .map(|j| {
            let s = (j as f64 - radius as f64) * dx / epsilon;
            (1.0 - s * s).max(0.0)
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    weights
}

/// Convolution with a discretized quadratic bump of radius `epsilon`.
///
/// Values beyond the grid are taken equal to the nearest boundary cell, so
/// constants are reproduced exactly and mass is preserved whenever the field
/// is constant within `epsilon` of both ends. Returns `f` unchanged when
/// `epsilon < dx`.
pub fn mollify(f: &CellField, epsilon: f64) -> Result<CellField> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "mollification radius must be positive, got {epsilon}"
        )));
    }
    let grid = *f.grid();
    if epsilon < grid.dx() {
        return Ok(f.clone());
    }
    let weights = epanechnikov_weights(grid.dx(), epsilon);
    let radius = (weights.len() / 2) as isize;
    let n = grid.n_cells() as isize;
    let src = f.values();
    let values = (0..n)
        .map(|i| {
            weights
                .iter()
                .enumerate()
                .map(|(j, w)| {
                    let idx = (i + j as isize - radius).clamp(0, n - 1);
                    w * src[idx as usize]
                })
                .sum()
        })
        .collect();
    Ok(CellField::from_parts(grid, values))
}
