//! Entropy solution of the local problem `q_t + ∂ₓ f(v q) = 0`,
//! `f(x) = x V(x)`.
//!
//! With `F(x) = ∫₀ˣ 1/v` and `ρ(t, x) = p(t, F(x))`, the density `p` solves
//! the classical law `p_t + ∂_y f(p) = 0` in `y = F(x)`. We sample `p₀` on a
//! uniform grid in `y`, run Godunov's scheme there and map the result back
//! by averaging over the images `F(cell_i)` of the physical cells.

use crate::error::{Error, Result};
use crate::grid::{sample, tv_slice, CellField, Grid, PiecewiseConstantSpec};
use crate::nonlocal::{product_spec, ModelConfig};
use crate::sim::{Clock, OutputSchedule, SimResult, StepDiagnostics};
use crate::velocity::VelocityLaw;

/// The piecewise-linear change of variables `F(x) = ∫₀ˣ 1/v(y) dy` of a
/// piecewise-constant speed, with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMap {
    breakpoints: Vec<f64>,
    speeds: Vec<f64>,
    /// An antiderivative `G` of `1/v` at the breakpoints, `G(b₀) = 0`.
    anchor: Vec<f64>,
    /// `G(0)`, so that `F = G − G(0)`.
    offset: f64,
}

impl CoordinateMap {
    pub fn new(v_spec: &PiecewiseConstantSpec) -> Result<Self> {
        if !(v_spec.min_level() > 0.0) {
            return Err(Error::InvalidSpec(
                "speed must be positive for the change of variables".into(),
            ));
        }
        let breakpoints = v_spec.breakpoints().to_vec();
        let speeds = v_spec.levels().to_vec();
        let mut anchor = Vec::with_capacity(breakpoints.len());
        if !breakpoints.is_empty() {
            anchor.push(0.0);
            for k in 1..breakpoints.len() {
                let width = breakpoints[k] - breakpoints[k - 1];
                anchor.push(anchor[k - 1] + width / speeds[k]);
            }
        }
        let mut map = Self {
            breakpoints,
            speeds,
            anchor,
            offset: 0.0,
        };
        map.offset = map.antiderivative(0.0);
        Ok(map)
    }

    fn antiderivative(&self, x: f64) -> f64 {
        if self.breakpoints.is_empty() {
            return x / self.speeds[0];
        }
        let k = self.breakpoints.partition_point(|&b| b <= x);
        if k == 0 {
            (x - self.breakpoints[0]) / self.speeds[0]
        } else {
            self.anchor[k - 1] + (x - self.breakpoints[k - 1]) / self.speeds[k]
        }
    }

    /// `F(x)`.
    pub fn forward(&self, x: f64) -> f64 {
        self.antiderivative(x) - self.offset
    }

    /// `F⁻¹(y)`, by binary search over the breakpoint images.
    pub fn inverse(&self, y: f64) -> f64 {
        let g = y + self.offset;
        if self.breakpoints.is_empty() {
            return g * self.speeds[0];
        }
        let k = self.anchor.partition_point(|&a| a <= g);
        if k == 0 {
            self.breakpoints[0] + (g - self.anchor[0]) * self.speeds[0]
        } else {
            self.breakpoints[k - 1] + (g - self.anchor[k - 1]) * self.speeds[k]
        }
    }

    /// Speed `v` at `x`.
    pub fn speed(&self, x: f64) -> f64 {
        self.speeds[self.breakpoints.partition_point(|&b| b <= x)]
    }

    /// Pushes a piecewise-constant function of `x` forward to one of `y`.
    pub fn push_forward(&self, spec: &PiecewiseConstantSpec) -> PiecewiseConstantSpec {
        PiecewiseConstantSpec::new(
            spec.breakpoints()
                .iter()
                .map(|&b| self.forward(b))
                .collect(),
            spec.levels().to_vec(),
        )
        .expect("F is strictly increasing")
    }
}

/// A physical grid together with a uniform grid covering its image under `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedGrid {
    pub base: Grid,
    /// `F` at the `n + 1` edges of `base`.
    pub f_edges: Vec<f64>,
    /// Uniform grid over the image of `base`, spacing at most `dx / v_max`.
    pub grid: Grid,
    pub map: CoordinateMap,
}

impl TransformedGrid {
    /// Averages a field on the transformed grid over the images of the
    /// physical cells: `q_i = (1/dx) ∫_{F(x_i)}^{F(x_{i+1})} p dy`. Since
    /// `dy = dx / v` this is the cell average of `p(F(x))/v(x)`, and it
    /// preserves `∫ q dx = ∫ p dy` exactly.
    pub fn pull_back(&self, p: &CellField) -> Result<CellField> {
        if p.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let dy = self.grid.dx();
        let values = p.values();
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        for v in values {
            prefix.push(prefix.last().unwrap() + v * dy);
        }
        let cumulative = |y: f64| {
            let j = self.grid.locate(y);
            let y0 = self.grid.edge(j);
            let frac = (y - y0).clamp(0.0, dy);
            prefix[j] + values[j] * frac
        };
        let dx = self.base.dx();
        let pulled = self
            .f_edges
            .windows(2)
            .map(|e| (cumulative(e[1]) - cumulative(e[0])) / dx)
            .collect();
        CellField::new(self.base, pulled)
    }
}

/// Computes `F` at every edge of `grid` and lays a uniform grid of spacing
/// at most `dx / v_max` over exactly `[F(x_left), F(x_right)]`.
pub fn transform_forward(v_spec: &PiecewiseConstantSpec, grid: &Grid) -> Result<TransformedGrid> {
    let map = CoordinateMap::new(v_spec)?;
    let f_edges: Vec<f64> = (0..=grid.n_cells())
        .map(|i| map.forward(grid.edge(i)))
        .collect();
    let (y_left, y_right) = (f_edges[0], f_edges[grid.n_cells()]);
    // fit a whole number of cells no wider than dx / v_max
    let n = ((y_right - y_left) * v_spec.max_level() / grid.dx() - 1e-9)
        .ceil()
        .max(1.0) as usize;
    let transformed = Grid::new(y_left, y_right, n)?;
    Ok(TransformedGrid {
        base: *grid,
        f_edges,
        grid: transformed,
        map,
    })
}

/// Godunov interface flux for a flux `f` with known critical points.
#[derive(Debug, Clone)]
pub struct GodunovFlux {
    law: VelocityLaw,
    critical: Vec<f64>,
}

impl GodunovFlux {
    /// Precomputes the roots of `f'` in `[lo, hi]`, the range the states
    /// can take.
    pub fn new(law: VelocityLaw, lo: f64, hi: f64) -> Self {
        let critical = law.flux_prime_polynomial().roots_in(lo, hi);
        Self { law, critical }
    }

    pub fn law(&self) -> &VelocityLaw {
        &self.law
    }

    /// `min_{[a,b]} f` if `a ≤ b`, `max_{[b,a]} f` otherwise.
    #[inline]
    pub fn flux(&self, a: f64, b: f64) -> f64 {
        let (fa, fb) = (self.law.flux(a), self.law.flux(b));
        if a <= b {
            self.critical
                .iter()
                .filter(|&&c| c > a && c < b)
                .fold(fa.min(fb), |m, &c| m.min(self.law.flux(c)))
        } else {
            self.critical
                .iter()
                .filter(|&&c| c > b && c < a)
                .fold(fa.max(fb), |m, &c| m.max(self.law.flux(c)))
        }
    }
}

/// Interface fluxes of the Godunov scheme with copy ghost cells on both
/// sides; `fluxes[j]` is the flux through the left edge of cell `j`.
fn godunov_fluxes(p: &[f64], flux: &GodunovFlux, fluxes: &mut [f64]) {
    let n = p.len();
    fluxes[0] = flux.flux(p[0], p[0]);
    for j in 1..n {
        fluxes[j] = flux.flux(p[j - 1], p[j]);
    }
    fluxes[n] = flux.flux(p[n - 1], p[n - 1]);
}

fn max_speed(law: &VelocityLaw, lo: f64, hi: f64) -> f64 {
    law.flux_prime_polynomial().max_abs_on(lo, hi)
}

/// One Godunov step. Errors if `dt · max|f'| > dx`.
pub fn godunov_step(p: &CellField, flux: &GodunovFlux, dt: f64) -> Result<CellField> {
    let dx = p.grid().dx();
    let speed = max_speed(&flux.law, p.min(), p.max());
    let limit = if speed > 0.0 {
        dx / speed
    } else {
        f64::INFINITY
    };
    if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    let mut fluxes = vec![0.0; p.len() + 1];
    godunov_fluxes(p.values(), flux, &mut fluxes);
    let lambda = dt / dx;
    let values = p
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| v - lambda * (fluxes[j + 1] - fluxes[j]))
        .collect();
    CellField::new(*p.grid(), values)
}

/// Godunov's scheme for `p_t + ∂_y f(p) = 0` up to `t_final`, with
/// `dt = cfl · dy / max|f'|` over the range of `p0`.
pub fn godunov_solve(
    p0: &CellField,
    law: &VelocityLaw,
    t_final: f64,
    cfl: f64,
    schedule: &OutputSchedule,
) -> Result<SimResult> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "cfl must lie in (0, 1], got {cfl}"
        )));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "final time must be nonnegative, got {t_final}"
        )));
    }
    let grid = *p0.grid();
    let dy = grid.dx();
    let (lo, hi) = (p0.min(), p0.max());
    let flux = GodunovFlux::new(law.clone(), lo, hi);
    let speed = max_speed(law, lo, hi);
    let dt_cfl = if speed > 0.0 {
        cfl * dy / speed
    } else {
        f64::INFINITY
    };

    let mut clock = Clock::new(schedule, t_final, dt_cfl);
    let mut p = p0.values().to_vec();
    let mut fluxes = vec![0.0; p.len() + 1];
    let mut times = vec![0.0];
    let mut snapshots = vec![p0.clone()];
    let mut diagnostics = Vec::new();
    let mut outflow = 0.0;

    loop {
        let mut record = StepDiagnostics {
            step: clock.step,
            time: clock.time,
            dt: 0.0,
            mass: p.iter().sum::<f64>() * dy,
            outflow,
            rho_min: p.iter().copied().fold(f64::INFINITY, f64::min),
            rho_max: p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            tv: tv_slice(&p),
        };
        if clock.done() {
            diagnostics.push(record);
            break;
        }
        let (dt, lands) = clock.propose();
        record.dt = dt;
        diagnostics.push(record);

        godunov_fluxes(&p, &flux, &mut fluxes);
        let lambda = dt / dy;
        for (j, pj) in p.iter_mut().enumerate() {
            *pj -= lambda * (fluxes[j + 1] - fluxes[j]);
        }
        outflow += dt * (fluxes[p.len()] - fluxes[0]);

        let store = clock.advance(dt, lands);
        if let Some((cell, &value)) = p.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite {
                step: clock.step,
                time: clock.time,
                cell,
                value,
            });
        }
        if store {
            snapshots.push(CellField::from_parts(grid, p.clone()));
            times.push(clock.time);
        }
    }

    Ok(SimResult {
        grid,
        times,
        snapshots,
        w_snapshots: Vec::new(),
        diagnostics,
    })
}

/// Local entropy solution for `cfg` (its horizon is ignored), returned on
/// the physical `grid` at the times of `schedule`. The diagnostics are those
/// of the run in transformed coordinates.
pub fn solve_local(cfg: &ModelConfig, grid: &Grid, schedule: &OutputSchedule) -> Result<SimResult> {
    cfg.validate()?;
    let transformed = transform_forward(&cfg.v_spec, grid)?;
    let p0 = transformed_initial_datum(cfg, &transformed);
    let res = godunov_solve(&p0, &cfg.law, cfg.t_final, cfg.cfl, schedule)?;
    // the pull-back of p₀ equals the cell averages of q₀ up to rounding;
    // store the exact averages so both solvers start from identical data
    let snapshots = std::iter::once(Ok(sample(&cfg.q0_spec, grid)))
        .chain(res.snapshots[1..].iter().map(|p| transformed.pull_back(p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimResult {
        grid: *grid,
        times: res.times,
        snapshots,
        w_snapshots: Vec::new(),
        diagnostics: res.diagnostics,
    })
}

/// `p₀(y) = v(F⁻¹(y)) q₀(F⁻¹(y))`, sampled exactly on the transformed grid.
pub fn transformed_initial_datum(cfg: &ModelConfig, transformed: &TransformedGrid) -> CellField {
    let rho0 = product_spec(&cfg.v_spec, &cfg.q0_spec);
    sample(&transformed.map.push_forward(&rho0), &transformed.grid)
}
