//! Computable checks on simulation results: the quadratic entropy
//! inequality, the maximum principle in `ρ = v·q`, the total-variation
//! bound for the look-ahead field, and distances between runs.

use crate::error::{Error, Result};
use crate::grid::{norm_l1, tv, CellField};
use crate::nonlocal::ModelConfig;
use crate::sim::SimResult;
use crate::velocity::VelocityLaw;

/// Quadratic B-spline bump on `[-1, 1]` with peak 1 at the origin.
fn bump(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 {
        1.0 - 2.0 * a * a
    } else if a < 1.0 {
        2.0 * (1.0 - a) * (1.0 - a)
    } else {
        0.0
    }
}

/// `∫_{-1}^{s} bump`.
fn bump_integral(s: f64) -> f64 {
    let half = 0.5;
    let a = s.abs().min(1.0);
    // ∫_0^a bump
    let from_zero = if a <= 0.5 {
        a - 2.0 * a * a * a / 3.0
    } else {
        let inner = 0.5 - 2.0 * 0.125 / 3.0;
        inner + (2.0 / 3.0) * (0.125 - (1.0 - a).powi(3))
    };
    if s >= 0.0 {
        half + from_zero
    } else {
        half - from_zero
    }
}

/// Separable test function `φ(t, x) = b((t − t_c)/t_w) · b((x − x_c)/x_w)`
/// built from quadratic B-spline bumps `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub id: String,
    pub x_center: f64,
    pub x_half_width: f64,
    pub t_center: f64,
    pub t_half_width: f64,
}

impl TestFunction {
    pub fn new(
        id: impl Into<String>,
        x_center: f64,
        x_half_width: f64,
        t_center: f64,
        t_half_width: f64,
    ) -> Self {
        Self {
            id: id.into(),
            x_center,
            x_half_width,
            t_center,
            t_half_width,
        }
    }

    pub fn time_profile(&self, t: f64) -> f64 {
        bump((t - self.t_center) / self.t_half_width)
    }

    pub fn space_profile(&self, x: f64) -> f64 {
        bump((x - self.x_center) / self.x_half_width)
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        self.time_profile(t) * self.space_profile(x)
    }

    /// `∫_a^b` of the spatial profile.
    pub fn space_integral(&self, a: f64, b: f64) -> f64 {
        let w = self.x_half_width;
        w * (bump_integral((b - self.x_center) / w) - bump_integral((a - self.x_center) / w))
    }

    /// `max(‖φ‖_∞, ‖φ_t‖_∞, ‖φ_x‖_∞)`.
    pub fn w1inf_norm(&self) -> f64 {
        1.0f64
            .max(2.0 / self.x_half_width)
            .max(2.0 / self.t_half_width)
    }

    pub fn x_support(&self) -> (f64, f64) {
        (
            self.x_center - self.x_half_width,
            self.x_center + self.x_half_width,
        )
    }

    /// Five bumps around the region the fronts of the reference problems
    /// sweep through, placed relative to `window` and `[0, t_final]`.
    /// This is a spot check of the entropy inequality, not a proof of it.
    pub fn builtin_family(t_final: f64, window: (f64, f64)) -> Vec<TestFunction> {
        let (a, b) = window;
        let len = b - a;
        let t = t_final;
        [
            (0.25, 0.15, 0.0, 0.6),
            (0.35, 0.25, 0.5, 0.5),
            (0.375, 0.1, 0.3, 0.3),
            (0.5, 0.2, 0.6, 0.4),
            (0.45, 0.4, 0.25, 0.75),
        ]
        .iter()
        .enumerate()
        .map(|(k, &(xc, xw, tc, tw))| {
            TestFunction::new(
                format!("bump{}", k + 1),
                a + xc * len,
                xw * len,
                tc * t,
                tw * t,
            )
        })
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub phi_id: String,
    /// The entropy functional for `α(x) = x²`.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Quadrature of the entropy functional
///
/// ```text
/// E = ∬ α(vq) φ_t / v + β(vq) φ_x dx dt + ∫ α(v q₀) φ(0, ·) / v dx
/// ```
///
/// with `α(x) = x²`, `β' = α' f'`. Stored snapshots are combined by the
/// trapezoidal rule in time; each cell integrates `φ` and `φ_x` exactly.
/// Passes when `E ≥ −10 (dx + Δt) ‖φ‖_{W^{1,∞}} (1 + ‖v q₀‖_∞)³`, where
/// `Δt` is the largest gap between stored times.
pub fn entropy_residual(
    sim: &SimResult,
    v: &CellField,
    law: &VelocityLaw,
    phi: &TestFunction,
    window: (f64, f64),
) -> Result<EntropyReport> {
    if v.grid() != &sim.grid {
        return Err(Error::GridMismatch);
    }
    let (lo, hi) = phi.x_support();
    if lo < window.0 || hi > window.1 {
        return Err(Error::SupportOutsideWindow {
            lo,
            hi,
            w_lo: window.0,
            w_hi: window.1,
        });
    }
    sim.grid.check_window(window)?;
    let t_final = sim.final_time();
    if phi.t_center + phi.t_half_width > t_final * (1.0 + 1e-12) && t_final > 0.0 {
        return Err(Error::InvalidConfig(format!(
            "test function {} is not supported below the final time {t_final}",
            phi.id
        )));
    }

    let grid = sim.grid;
    let beta = law.quadratic_entropy_flux();
    let n = grid.n_cells();
    let cell_mass: Vec<f64> = (0..n)
        .map(|i| phi.space_integral(grid.edge(i), grid.edge(i + 1)))
        .collect();
    let cell_slope: Vec<f64> = (0..n)
        .map(|i| phi.space_profile(grid.edge(i + 1)) - phi.space_profile(grid.edge(i)))
        .collect();

    // A(t) = ∫ α(ρ)/v X dx, B(t) = ∫ β(ρ) X' dx
    let moments: Vec<(f64, f64)> = sim
        .snapshots
        .iter()
        .map(|q| {
            q.values().iter().zip(v.values()).enumerate().fold(
                (0.0, 0.0),
                |(a, b), (i, (&qi, &vi))| {
                    let rho = vi * qi;
                    (
                        a + rho * rho / vi * cell_mass[i],
                        b + beta.eval(rho) * cell_slope[i],
                    )
                },
            )
        })
        .collect();

    let times = &sim.times;
    let mut value = phi.time_profile(0.0) * moments[0].0;
    let mut max_gap: f64 = 0.0;
    for k in 0..times.len().saturating_sub(1) {
        let (t0, t1) = (times[k], times[k + 1]);
        let (s0, s1) = (phi.time_profile(t0), phi.time_profile(t1));
        let (a0, b0) = moments[k];
        let (a1, b1) = moments[k + 1];
        value += 0.5 * (a0 + a1) * (s1 - s0);
        value += 0.5 * (t1 - t0) * (s0 * b0 + s1 * b1);
        max_gap = max_gap.max(t1 - t0);
    }

    let rho_sup = v.product(&sim.snapshots[0])?.max().max(0.0);
    let tolerance = 10.0 * (grid.dx() + max_gap) * phi.w1inf_norm() * (1.0 + rho_sup).powi(3);
    Ok(EntropyReport {
        phi_id: phi.id.clone(),
        value,
        tolerance,
        pass: value >= -tolerance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxPrincipleReport {
    pub min: f64,
    pub max: f64,
    /// `essinf v·q₀` and `‖v·q₀‖_∞` of the stored initial state.
    pub lower_bound: f64,
    pub upper_bound: f64,
}

impl MaxPrincipleReport {
    /// How far `[min, max]` sticks out of the bounds (zero if inside).
    pub fn violation(&self) -> f64 {
        (self.lower_bound - self.min)
            .max(self.max - self.upper_bound)
            .max(0.0)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.violation() <= tol
    }
}

/// Range of `v·q` over every recorded step and stored snapshot.
pub fn max_principle_check(sim: &SimResult, v: &CellField) -> Result<MaxPrincipleReport> {
    let rho0 = v.product(&sim.snapshots[0])?;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for q in &sim.snapshots {
        let rho = v.product(q)?;
        min = min.min(rho.min());
        max = max.max(rho.max());
    }
    for d in &sim.diagnostics {
        min = min.min(d.rho_min);
        max = max.max(d.rho_max);
    }
    Ok(MaxPrincipleReport {
        min,
        max,
        lower_bound: rho0.min(),
        upper_bound: rho0.max(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvReport {
    /// `|v·q₀|_TV`, the bound at `t = 0`.
    pub initial_bound: f64,
    pub max_tv: f64,
    /// `sup_t tv(W(t)) / bound(t)`; zero when the bound is infinite.
    pub max_ratio: f64,
    /// Whether the speed satisfies the one-sided Lipschitz condition.
    pub bound_finite: bool,
}

/// Compares `tv(W(t))` at every recorded step with
/// `|v·q₀|_TV · exp(2 t L ‖V‖_∞)`, `‖V‖_∞` over `[0, ‖v·q₀‖_∞]`.
pub fn tv_bounds_check(sim: &SimResult, cfg: &ModelConfig, osl: f64) -> TvReport {
    let initial_bound = cfg.rho0_spec().total_variation();
    let v_norm = cfg.law.velocity().max_abs_on(0.0, cfg.rho_sup());
    let bound_finite = osl.is_finite();
    let mut max_tv: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for d in &sim.diagnostics {
        max_tv = max_tv.max(d.tv);
        let growth = if d.time == 0.0 {
            1.0
        } else {
            (2.0 * d.time * osl * v_norm).exp()
        };
        let bound = initial_bound * growth;
        let ratio = if bound.is_infinite() {
            0.0
        } else if bound > 0.0 {
            d.tv / bound
        } else if d.tv > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        max_ratio = max_ratio.max(ratio);
    }
    TvReport {
        initial_bound,
        max_tv,
        max_ratio,
        bound_finite,
    }
}

/// `sup_t ‖a(t) − b(t)‖_{L¹(window)}` over the stored snapshots.
pub fn sup_l1_distance(a: &SimResult, b: &SimResult, window: (f64, f64)) -> Result<f64> {
    a.check_same_times(b)?;
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| norm_l1(&x.difference(y)?, window))
        .try_fold(0.0, |m: f64, d| d.map(|d| m.max(d)))
}

/// `sup_{t,x} |W_a − W_b|` over the stored look-ahead fields.
pub fn sup_w_distance(a: &SimResult, b: &SimResult) -> Result<f64> {
    a.check_same_times(b)?;
    a.w_snapshots
        .iter()
        .zip(&b.w_snapshots)
        .map(|(x, y)| Ok(crate::grid::norm_linf(&x.difference(y)?)))
        .try_fold(0.0, |m: f64, d: Result<f64>| d.map(|d| m.max(d)))
}

/// `(sup_t ‖q_η − q_*‖, sup_t ‖W_η − v·q_*‖)` in `L¹(window)`.
pub fn limit_error(
    nonlocal: &SimResult,
    local: &SimResult,
    v: &CellField,
    window: (f64, f64),
) -> Result<(f64, f64)> {
    nonlocal.check_same_times(local)?;
    if nonlocal.grid != local.grid {
        return Err(Error::GridMismatch);
    }
    let q_error = sup_l1_distance(nonlocal, local, window)?;
    let mut w_error: f64 = 0.0;
    for (w, q) in nonlocal.w_snapshots.iter().zip(&local.snapshots) {
        let rho = v.product(q)?;
        w_error = w_error.max(norm_l1(&w.difference(&rho)?, window)?);
    }
    Ok((q_error, w_error))
}

/// `(sup_t ‖W_η − v·q_η‖_{L¹(window)}, sup over steps of tv(W_η))`.
pub fn w_collapse(sim: &SimResult, v: &CellField, window: (f64, f64)) -> Result<(f64, f64)> {
    let mut gap: f64 = 0.0;
    for (w, q) in sim.w_snapshots.iter().zip(&sim.snapshots) {
        gap = gap.max(norm_l1(&w.difference(&v.product(q)?)?, window)?);
    }
    let tv_sup = sim
        .diagnostics
        .iter()
        .map(|d| d.tv)
        .chain(sim.w_snapshots.iter().map(tv))
        .fold(0.0, f64::max);
    Ok((gap, tv_sup))
}

/// Errors against the local limit for a decreasing sequence of horizons.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub etas: Vec<f64>,
    pub q_errors: Vec<f64>,
    pub w_errors: Vec<f64>,
    /// `log(e_k / e_{k+1}) / log(η_k / η_{k+1})` for consecutive horizons.
    pub observed_rates: Vec<f64>,
}

impl ConvergenceReport {
    pub fn new(etas: Vec<f64>, q_errors: Vec<f64>, w_errors: Vec<f64>) -> Result<Self> {
        if etas.len() != q_errors.len() || etas.len() != w_errors.len() {
            return Err(Error::InvalidConfig(
                "error arrays must align with the horizons".into(),
            ));
        }
        if etas.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidConfig(
                "horizons must be strictly decreasing".into(),
            ));
        }
        let observed_rates = etas
            .windows(2)
            .zip(q_errors.windows(2))
            .map(|(e, q)| (q[0] / q[1]).log2() / (e[0] / e[1]).log2())
            .collect();
        Ok(Self {
            etas,
            q_errors,
            w_errors,
            observed_rates,
        })
    }

    pub fn q_strictly_decreasing(&self) -> bool {
        self.q_errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn w_strictly_decreasing(&self) -> bool {
        self.w_errors.windows(2).all(|w| w[1] < w[0])
    }
}

/// First position, scanning left to right, where the field crosses `level`
/// upwards, linearly interpolated between cell centers.
pub fn first_crossing(f: &CellField, level: f64) -> Option<f64> {
    let g = f.grid();
    let vals = f.values();
    (0..vals.len().saturating_sub(1)).find_map(|i| {
        let (a, b) = (vals[i], vals[i + 1]);
        (a < level && b >= level).then(|| g.center(i) + (level - a) / (b - a) * g.dx())
    })
}

/// Median of the cell values whose centers lie in `(lo, hi)`.
pub fn median_over(f: &CellField, lo: f64, hi: f64) -> Option<f64> {
    let g = f.grid();
    let mut vals: Vec<f64> = (0..g.n_cells())
        .filter(|&i| g.center(i) > lo && g.center(i) < hi)
        .map(|i| f.values()[i])
        .collect();
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(f64::total_cmp);
    let m = vals.len() / 2;
    Some(if vals.len() % 2 == 1 {
        vals[m]
    } else {
        0.5 * (vals[m - 1] + vals[m])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::sim::StepDiagnostics;

    fn bump_oracle_integral(s: f64) -> f64 {
        let m = 200_000;
        let h = (s + 1.0) / m as f64;
        (0..m).map(|j| bump(-1.0 + (j as f64 + 0.5) * h) * h).sum()
    }

    #[test]
    fn bump_antiderivative_matches_quadrature() {
        for s in [-1.0, -0.7, -0.5, -0.1, 0.0, 0.3, 0.5, 0.8, 1.0] {
            assert!(
                (bump_integral(s) - bump_oracle_integral(s)).abs() < 1e-9,
                "s = {s}"
            );
        }
        assert!((bump_integral(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(bump_integral(5.0), bump_integral(1.0));
    }

    #[test]
    fn bump_lipschitz_constant_is_two() {
        let h = 1e-6;
        let steepest = (0..2000)
            .map(|k| -1.0 + k as f64 * 1e-3)
            .map(|s| ((bump(s + h) - bump(s)) / h).abs())
            .fold(0.0, f64::max);
        assert!((steepest - 2.0).abs() < 1e-4);
    }

    /// A result holding the exact translate `q(t, x) = g(x − s t)` of a
    /// piecewise-constant profile, sampled at `n_t + 1` times.
    fn travelling(
        grid: Grid,
        t_final: f64,
        n_t: usize,
        s: f64,
        g: impl Fn(f64) -> f64,
    ) -> SimResult {
        let times: Vec<f64> = (0..=n_t).map(|k| t_final * k as f64 / n_t as f64).collect();
        let snapshots = times
            .iter()
            .map(|&t| {
                let spec_at = |x: f64| g(x - s * t);
                // exact cell averages by fine midpoint sampling
                let m = 64;
                CellField::new(
                    grid,
                    (0..grid.n_cells())
                        .map(|i| {
                            (0..m)
                                .map(|j| {
                                    spec_at(grid.edge(i) + (j as f64 + 0.5) * grid.dx() / m as f64)
                                })
                                .sum::<f64>()
                                / m as f64
                        })
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        SimResult {
            grid,
            times,
            snapshots,
            w_snapshots: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    #[test]
    fn constant_state_has_zero_residual() {
        let grid = Grid::new(-2.0, 2.0, 200).unwrap();
        let sim = travelling(grid, 1.0, 50, 0.0, |_| 0.3);
        let v = CellField::constant(grid, 1.0);
        let law = VelocityLaw::quadratic_greenshields();
        for phi in TestFunction::builtin_family(1.0, (-2.0, 2.0)) {
            let r = entropy_residual(&sim, &v, &law, &phi, (-2.0, 2.0)).unwrap();
            assert!(r.value.abs() < 1e-10, "{}: {}", phi.id, r.value);
            assert!(r.pass);
        }
    }

    /// Entropy production rate of a shock with left/right states `l`, `r`
    /// and speed `s`: `s [α] − [β]` per unit of test function.
    fn shock_dissipation(l: f64, r: f64, s: f64) -> f64 {
        let alpha = |x: f64| x * x;
        let beta = |x: f64| x * x - 1.5 * x.powi(4);
        s * (alpha(r) - alpha(l)) - (beta(r) - beta(l))
    }

    /// `∫ φ(t, x_s(t)) dt` along a shock path, by midpoint quadrature.
    fn along_path(phi: &TestFunction, x0: f64, s: f64, t_final: f64) -> f64 {
        let m = 20_000;
        let h = t_final / m as f64;
        (0..m)
            .map(|k| {
                let t = (k as f64 + 0.5) * h;
                phi.eval(t, x0 + s * t) * h
            })
            .sum()
    }

    #[test]
    fn admissible_and_inadmissible_shocks() {
        let grid = Grid::new(-1.0, 2.0, 1500).unwrap();
        let v = CellField::constant(grid, 1.0);
        let law = VelocityLaw::quadratic_greenshields();
        let phi = TestFunction::new("probe", 0.2, 0.6, 0.3, 0.3);
        let window = (-1.0, 2.0);

        // 0 | ½: compressive, admissible
        let good = travelling(grid, 0.6, 600, 0.75, |x| if x >= 0.0 { 0.5 } else { 0.0 });
        let r = entropy_residual(&good, &v, &law, &phi, window).unwrap();
        let expected = shock_dissipation(0.0, 0.5, 0.75) * along_path(&phi, 0.0, 0.75, 0.6);
        assert!(expected > 0.0);
        assert!(
            (r.value - expected).abs() < 0.05 * expected,
            "{} vs {expected}",
            r.value
        );

        // ½ | 0 travelling as a shock: expansive, violates the inequality
        let bad = travelling(grid, 0.6, 600, 0.75, |x| if x < 0.0 { 0.5 } else { 0.0 });
        let r = entropy_residual(&bad, &v, &law, &phi, window).unwrap();
        let expected = shock_dissipation(0.5, 0.0, 0.75) * along_path(&phi, 0.0, 0.75, 0.6);
        assert!(expected < 0.0);
        assert!(
            (r.value - expected).abs() < 0.05 * expected.abs(),
            "{} vs {expected}",
            r.value
        );
    }

    #[test]
    fn support_outside_window_is_rejected() {
        let grid = Grid::new(-1.0, 1.0, 100).unwrap();
        let sim = travelling(grid, 1.0, 4, 0.0, |_| 0.1);
        let v = CellField::constant(grid, 1.0);
        let phi = TestFunction::new("wide", 0.0, 0.9, 0.2, 0.2);
        let err = entropy_residual(
            &sim,
            &v,
            &VelocityLaw::quadratic_greenshields(),
            &phi,
            (-0.5, 0.5),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SupportOutsideWindow { .. }));
    }

    #[test]
    fn max_principle_on_zero_data() {
        let grid = Grid::new(0.0, 1.0, 10).unwrap();
        let sim = travelling(grid, 1.0, 3, 0.0, |_| 0.0);
        let r = max_principle_check(&sim, &CellField::constant(grid, 2.0)).unwrap();
        assert_eq!((r.min, r.max), (0.0, 0.0));
        assert!(r.holds(0.0));
    }

    #[test]
    fn tv_ratio_for_zero_data() {
        let cfg =
            crate::presets::Preset::Fig1.model(crate::NonlocalHorizon::new(1.0).unwrap(), 1.0, 0.9);
        let grid = Grid::new(-2.0, 3.0, 10).unwrap();
        let mut sim = travelling(grid, 1.0, 2, 0.0, |_| 0.0);
        sim.diagnostics = (0..3)
            .map(|k| StepDiagnostics {
                step: k,
                time: k as f64 * 0.5,
                dt: 0.5,
                mass: 0.0,
                outflow: 0.0,
                rho_min: 0.0,
                rho_max: 0.0,
                tv: 0.0,
            })
            .collect();
        let r = tv_bounds_check(&sim, &cfg, 0.0);
        assert_eq!(r.initial_bound, 1.5);
        assert_eq!(r.max_ratio, 0.0);
        let r = tv_bounds_check(&sim, &cfg, f64::INFINITY);
        assert!(!r.bound_finite);
    }

    #[test]
    fn identical_runs_have_zero_distance() {
        let grid = Grid::new(0.0, 1.0, 20).unwrap();
        let sim = travelling(grid, 1.0, 3, 0.3, |x| if x < 0.5 { 0.4 } else { 0.1 });
        let mut with_w = sim.clone();
        with_w.w_snapshots = sim.snapshots.clone();
        let v = CellField::constant(grid, 1.0);
        let (qe, we) = limit_error(&with_w, &sim, &v, (0.0, 1.0)).unwrap();
        assert_eq!(qe, 0.0);
        assert_eq!(we, 0.0);
        let mut shifted = sim.clone();
        shifted.times[1] += 1e-3;
        assert_eq!(
            limit_error(&with_w, &shifted, &v, (0.0, 1.0)),
            Err(Error::TimeMismatch)
        );
    }

    #[test]
    fn convergence_report_rates() {
        let r = ConvergenceReport::new(
            vec![1.0, 0.5, 0.25],
            vec![0.4, 0.2, 0.1],
            vec![1.0, 0.5, 0.3],
        )
        .unwrap();
        assert_eq!(r.observed_rates, vec![1.0, 1.0]);
        assert!(r.q_strictly_decreasing() && r.w_strictly_decreasing());
        assert!(ConvergenceReport::new(vec![1.0, 1.0], vec![0.0; 2], vec![0.0; 2]).is_err());
    }

    #[test]
    fn crossing_and_median() {
        let grid = Grid::new(0.0, 5.0, 5).unwrap();
        let f = CellField::new(grid, vec![0.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(first_crossing(&f, 0.5), Some(2.0));
        assert_eq!(median_over(&f, 1.0, 5.0), Some(0.5));
        assert_eq!(median_over(&f, 5.0, 6.0), None);
    }
}
