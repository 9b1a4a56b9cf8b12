//! Explicit upwind finite-volume solver for
//!
//! ```text
//! q_t + ∂ₓ( V(W_η[v·q]) v q ) = 0
//! ```
//!
//! The interface flux is `F_{i+1/2} = v_i q_i V(W_{i+1})`, with `W` taken at
//! the left edge of cell `i+1` (the right edge of cell `i`). Since the
//! transport speed `v V(W)` is nonnegative the scheme is upwind from the
//! left. Nothing enters at the left boundary; mass leaves freely on the right.

use crate::error::{Error, Result};
use crate::grid::{sample, tv_slice, CellField, Grid, PiecewiseConstantSpec};
use crate::kernel::{eval_w_density, eval_w_edges_into, NonlocalHorizon};
use crate::sim::{Clock, OutputSchedule, SimResult, StepDiagnostics};
use crate::velocity::VelocityLaw;

/// Data of one nonlocal problem, described by piecewise-constant functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub law: VelocityLaw,
    pub v_spec: PiecewiseConstantSpec,
    pub q0_spec: PiecewiseConstantSpec,
    pub eta: NonlocalHorizon,
    pub t_final: f64,
    pub cfl: f64,
}

impl ModelConfig {
    pub fn new(
        law: VelocityLaw,
        v_spec: PiecewiseConstantSpec,
        q0_spec: PiecewiseConstantSpec,
        eta: NonlocalHorizon,
        t_final: f64,
        cfl: f64,
    ) -> Result<Self> {
        let cfg = Self {
            law,
            v_spec,
            q0_spec,
            eta,
            t_final,
            cfl,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_eta(&self, eta: NonlocalHorizon) -> Self {
        Self {
            eta,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "final time must be nonnegative, got {}",
                self.t_final
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        let v_min = self.v_spec.min_level();
        if !(v_min > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "speed level {v_min} violates v >= v_min > 0"
            )));
        }
        if self.q0_spec.min_level() < 0.0 {
            return Err(Error::InvalidConfig(
                "initial datum must be nonnegative".into(),
            ));
        }
        check_law(&self.law, self.rho_sup())
    }

    /// `‖v·q₀‖_∞` over ℝ.
    pub fn rho_sup(&self) -> f64 {
        self.rho_levels().fold(0.0, f64::max)
    }

    /// `essinf v·q₀` over ℝ.
    pub fn rho_inf(&self) -> f64 {
        self.rho_levels().fold(f64::INFINITY, f64::min)
    }

    /// Levels of the piecewise-constant product `v·q₀`.
    fn rho_levels(&self) -> impl Iterator<Item = f64> + '_ {
        let bps = self.v_spec.merged_breakpoints(&self.q0_spec);
        let mut probes = Vec::with_capacity(bps.len() + 1);
        match (bps.first(), bps.last()) {
            (Some(&first), Some(&last)) => {
                probes.push(first - 1.0);
                probes.extend(bps.windows(2).map(|w| 0.5 * (w[0] + w[1])));
                probes.push(last + 1.0);
            }
            _ => probes.push(0.0),
        }
        probes
            .into_iter()
            .map(|x| self.v_spec.eval(x) * self.q0_spec.eval(x))
    }

    /// Product of two piecewise-constant functions, exactly.
    pub fn rho0_spec(&self) -> PiecewiseConstantSpec {
        product_spec(&self.v_spec, &self.q0_spec)
    }
}

pub(crate) fn product_spec(
    a: &PiecewiseConstantSpec,
    b: &PiecewiseConstantSpec,
) -> PiecewiseConstantSpec {
    let bps = a.merged_breakpoints(b);
    let mut levels = Vec::with_capacity(bps.len() + 1);
    let eval = |x: f64| a.eval(x) * b.eval(x);
    match (bps.first(), bps.last()) {
        (Some(&first), Some(&last)) => {
            levels.push(eval(first - 1.0));
            levels.extend(bps.windows(2).map(|w| eval(0.5 * (w[0] + w[1]))));
            levels.push(eval(last + 1.0));
        }
        _ => levels.push(eval(0.0)),
    }
    PiecewiseConstantSpec::new(bps, levels).expect("merged breakpoints are strictly increasing")
}

/// `V ≥ 0` and `V' ≤ 0` on `[0, m]`.
fn check_law(law: &VelocityLaw, m: f64) -> Result<()> {
    let v_min = law.velocity().min_on(0.0, m);
    if v_min < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "V must be nonnegative on [0, {m}] for the upwind scheme, min is {v_min}"
        )));
    }
    let vp_max = law.velocity_prime().max_on(0.0, m);
    if vp_max > 0.0 {
        return Err(Error::InvalidConfig(format!(
            "V must be nonincreasing on [0, {m}], max V' is {vp_max}"
        )));
    }
    Ok(())
}

/// Upper bound for `dt·(transport coefficient)/dx` that keeps the scheme
/// positive and within the bounds of `v·q₀`:
/// `v_max · (max V + M · max|V'|)` on `[0, M]`.
pub fn wave_speed_bound(law: &VelocityLaw, v_max: f64, rho_sup: f64) -> f64 {
    let m = rho_sup.max(0.0);
    v_max * (law.velocity().max_on(0.0, m) + m * law.velocity_prime().max_abs_on(0.0, m))
}

/// A nonlocal problem on a concrete grid. Built from a [`ModelConfig`] or
/// directly from (possibly mollified) fields.
#[derive(Debug, Clone)]
pub struct NonlocalProblem {
    v: CellField,
    q0: CellField,
    law: VelocityLaw,
    eta: NonlocalHorizon,
    t_final: f64,
    cfl: f64,
    rho_sup: f64,
}

impl NonlocalProblem {
    pub fn from_config(cfg: &ModelConfig, grid: &Grid) -> Result<Self> {
        cfg.validate()?;
        let mut problem = Self::from_fields(
            sample(&cfg.v_spec, grid),
            sample(&cfg.q0_spec, grid),
            cfg.law.clone(),
            cfg.eta,
            cfg.t_final,
            cfg.cfl,
        )?;
        // the continuous bound dominates the sampled one
        problem.rho_sup = problem.rho_sup.max(cfg.rho_sup());
        Ok(problem)
    }

    pub fn from_fields(
        v: CellField,
        q0: CellField,
        law: VelocityLaw,
        eta: NonlocalHorizon,
        t_final: f64,
        cfl: f64,
    ) -> Result<Self> {
        if v.grid() != q0.grid() {
            return Err(Error::GridMismatch);
        }
        if !(v.min() > 0.0) {
            return Err(Error::InvalidConfig(
                "speed must be bounded away from zero".into(),
            ));
        }
        if q0.min() < 0.0 {
            return Err(Error::InvalidConfig(
                "initial datum must be nonnegative".into(),
            ));
        }
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
        let rho_sup = v.product(&q0)?.max().max(0.0);
        check_law(&law, rho_sup)?;
        Ok(Self {
            v,
            q0,
            law,
            eta,
            t_final,
            cfl,
            rho_sup,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.v.grid()
    }

    pub fn v(&self) -> &CellField {
        &self.v
    }

    pub fn q0(&self) -> &CellField {
        &self.q0
    }

    pub fn eta(&self) -> NonlocalHorizon {
        self.eta
    }

    /// Largest admissible time step, `dt_max` with `cfl = 1`.
    pub fn max_time_step(&self) -> f64 {
        let speed = wave_speed_bound(&self.law, self.v.max(), self.rho_sup);
        if speed > 0.0 {
            self.grid().dx() / speed
        } else {
            f64::INFINITY
        }
    }

    /// The step the solver takes: `cfl · dt_max`, capped at the horizon.
    pub fn time_step(&self) -> f64 {
        (self.cfl * self.max_time_step()).min(self.t_final.max(f64::MIN_POSITIVE))
    }

    /// One explicit step from `q`.
    pub fn step(&self, q: &CellField, dt: f64) -> Result<CellField> {
        if q.grid() != self.grid() {
            return Err(Error::GridMismatch);
        }
        let limit = self.cfl * self.max_time_step();
        if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, limit });
        }
        let mut stepper = Stepper::new(self);
        let mut values = q.values().to_vec();
        stepper.load_density(&values, &self.v);
        stepper.advance(&mut values, dt);
        CellField::new(*self.grid(), values)
    }

    pub fn run(&self, schedule: &OutputSchedule) -> Result<SimResult> {
        let grid = *self.grid();
        let dx = grid.dx();
        let mut clock = Clock::new(schedule, self.t_final, self.time_step());
        let mut stepper = Stepper::new(self);
        let mut q = self.q0.values().to_vec();

        let mut times = vec![0.0];
        let mut snapshots = vec![self.q0.clone()];
        let mut w_snapshots = vec![eval_w_density(&self.v.product(&self.q0)?, self.eta)];
        let mut diagnostics = Vec::new();
        let mut outflow = 0.0;

        loop {
            stepper.load_density(&q, &self.v);
            let mut record = StepDiagnostics {
                step: clock.step,
                time: clock.time,
                dt: 0.0,
                mass: q.iter().sum::<f64>() * dx,
                outflow,
                rho_min: stepper.rho_min(),
                rho_max: stepper.rho_max(),
                tv: tv_slice(&stepper.w[..grid.n_cells()]),
            };
            if clock.done() {
                diagnostics.push(record);
                break;
            }
            let (dt, lands) = clock.propose();
            record.dt = dt;
            diagnostics.push(record);

            outflow += stepper.advance(&mut q, dt);
            let store = clock.advance(dt, lands);
            if let Some((cell, &value)) = q.iter().enumerate().find(|(_, x)| !x.is_finite()) {
                return Err(Error::NonFinite {
                    step: clock.step,
                    time: clock.time,
                    cell,
                    value,
                });
            }
            if store {
                let field = CellField::from_parts(grid, q.clone());
                w_snapshots.push(eval_w_density(&self.v.product(&field)?, self.eta));
                snapshots.push(field);
                times.push(clock.time);
            }
        }

        Ok(SimResult {
            grid,
            times,
            snapshots,
            w_snapshots,
            diagnostics,
        })
    }
}

/// Scratch buffers for the update, reused across steps.
struct Stepper<'a> {
    law: &'a VelocityLaw,
    eta: f64,
    dx: f64,
    rho: Vec<f64>,
    w: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(problem: &'a NonlocalProblem) -> Self {
        let n = problem.grid().n_cells();
        Self {
            law: &problem.law,
            eta: problem.eta.get(),
            dx: problem.grid().dx(),
            rho: vec![0.0; n],
            w: vec![0.0; n + 1],
        }
    }

    /// Sets `ρ = v·q` and refreshes `W` at every edge.
    fn load_density(&mut self, q: &[f64], v: &CellField) {
        for ((r, q), v) in self.rho.iter_mut().zip(q).zip(v.values()) {
            *r = v * q;
        }
        eval_w_edges_into(&self.rho, self.dx, self.eta, &mut self.w);
    }

    fn rho_min(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn rho_max(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Updates `q` in place from the loaded density; returns the mass that
    /// left through the right boundary.
    fn advance(&self, q: &mut [f64], dt: f64) -> f64 {
        let lambda = dt / self.dx;
        let mut incoming = 0.0;
        for (i, qi) in q.iter_mut().enumerate() {
            let outgoing = self.rho[i] * self.law.v(self.w[i + 1]);
            *qi -= lambda * (outgoing - incoming);
            incoming = outgoing;
        }
        dt * incoming
    }
}

/// One explicit step of the scheme for data given by `cfg`, with the CFL
/// bound taken from `‖v·q₀‖_∞` of `cfg`.
pub fn step(q: &CellField, v: &CellField, cfg: &ModelConfig, dt: f64) -> Result<CellField> {
    if q.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let mut problem = NonlocalProblem::from_fields(
        v.clone(),
        q.clone(),
        cfg.law.clone(),
        cfg.eta,
        cfg.t_final,
        cfg.cfl,
    )?;
    problem.rho_sup = problem.rho_sup.max(cfg.rho_sup());
    problem.step(q, dt)
}

/// Runs the nonlocal problem of `cfg` on `grid`.
pub fn run(cfg: &ModelConfig, grid: &Grid, schedule: &OutputSchedule) -> Result<SimResult> {
    NonlocalProblem::from_config(cfg, grid)?.run(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;

    fn fig1(eta: f64, t_final: f64) -> ModelConfig {
        Preset::Fig1.model(NonlocalHorizon::new(eta).unwrap(), t_final, 0.9)
    }

    #[test]
    fn rho_bounds_of_presets() {
        let cfg = fig1(1.0, 1.0);
        assert_eq!(cfg.rho_sup(), 0.75);
        assert_eq!(cfg.rho_inf(), 0.0);
        let rho0 = cfg.rho0_spec();
        assert_eq!(rho0.levels(), &[0.0, 0.75, 0.25, 0.0]);
        assert_eq!(rho0.total_variation(), 1.5);
    }

    #[test]
    fn config_validation() {
        let cfg = fig1(1.0, 1.0);
        let mut bad = cfg.clone();
        bad.cfl = 1.5;
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.v_spec = PiecewiseConstantSpec::new(vec![0.0], vec![1.0, 0.0]).unwrap();
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        // V' > 0
        bad.law = VelocityLaw::new(crate::Polynomial::new(vec![1.0, 1.0]));
        assert!(bad.validate().is_err());
        let mut bad = cfg;
        // V < 0 on [0, 0.75]
        bad.law = VelocityLaw::new(crate::Polynomial::new(vec![0.5, 0.0, -1.0]));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let cfg = fig1(0.1, 1.0);
        let g = Grid::new(-2.0, 3.0, 100).unwrap();
        let v = sample(&cfg.v_spec, &g);
        let q = CellField::zeros(g);
        let next = step(&q, &v, &cfg, 1e-3).unwrap();
        assert!(next.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn stagnation_at_root_of_v() {
        // V(1) = 0 with v ≡ 1 and q ≡ 1: zero flux in the interior
        let g = Grid::new(0.0, 1.0, 50).unwrap();
        let cfg = ModelConfig::new(
            VelocityLaw::quadratic_greenshields(),
            PiecewiseConstantSpec::constant(1.0),
            PiecewiseConstantSpec::constant(1.0),
            NonlocalHorizon::new(1e-4).unwrap(),
            1.0,
            0.9,
        )
        .unwrap();
        let v = CellField::constant(g, 1.0);
        let q = CellField::constant(g, 1.0);
        let dt = 0.1 * g.dx();
        let next = step(&q, &v, &cfg, dt).unwrap();
        // away from the right edge W = 1 to e^{-dx/η}-precision
        for x in &next.values()[..49] {
            assert!((x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let cfg = fig1(0.1, 1.0);
        let g = Grid::new(-2.0, 3.0, 100).unwrap();
        let problem = NonlocalProblem::from_config(&cfg, &g).unwrap();
        let too_big = 1.01 * problem.cfl * problem.max_time_step();
        let err = problem.step(problem.q0(), too_big).unwrap_err();
        assert!(matches!(err, Error::CflViolation { .. }));
    }

    #[test]
    fn zero_horizon_returns_initial_state() {
        let cfg = fig1(1.0, 0.0);
        let g = Grid::new(-2.0, 3.0, 200).unwrap();
        let res = run(&cfg, &g, &OutputSchedule::EverySteps(1)).unwrap();
        assert_eq!(res.times, vec![0.0]);
        assert_eq!(res.snapshots.len(), 1);
        assert_eq!(res.snapshots[0], sample(&cfg.q0_spec, &g));
        assert_eq!(res.diagnostics.len(), 1);
    }

    #[test]
    fn mass_conserved_without_outflow() {
        let cfg = fig1(1.0, 1.0);
        let g = Grid::new(-2.0, 3.0, 1000).unwrap();
        let res = run(&cfg, &g, &OutputSchedule::EverySteps(50)).unwrap();
        for d in &res.diagnostics {
            assert!(
                (d.mass - 0.5).abs() < 1e-12,
                "mass {} at t={}",
                d.mass,
                d.time
            );
            assert!(d.outflow.abs() < 1e-15);
        }
        assert_eq!(res.final_time(), 1.0);
        assert!(res.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn maximum_principle_and_positivity_small_eta() {
        let cfg = fig1(1e-4, 1.0);
        let g = Grid::new(-2.0, 3.0, 2000).unwrap();
        let res = run(&cfg, &g, &OutputSchedule::EverySteps(100)).unwrap();
        for d in &res.diagnostics {
            assert!(d.rho_min >= -1e-12);
            assert!(d.rho_max <= 0.75 + 1e-12);
        }
        for s in &res.snapshots {
            assert!(s.min() >= -1e-12);
        }
    }

    #[test]
    fn outflow_is_accounted() {
        // short domain: mass leaves on the right
        let cfg = fig1(0.05, 1.0);
        let g = Grid::new(-1.0, 0.8, 600).unwrap();
        let res = run(&cfg, &g, &OutputSchedule::EverySteps(1000)).unwrap();
        let last = res.diagnostics.last().unwrap();
        assert!(last.outflow > 1e-3);
        assert!(res.mass_defect() < 1e-12);
    }

    #[test]
    fn leftmost_shock_moves_at_rankine_hugoniot_speed() {
        // v ≡ 1, q₀ = ½ on [-½, ½): the upward jump at -½ is a shock of
        // speed (f(½) - f(0))/½ = 3/4 for f(x) = x - x³
        let cfg = ModelConfig::new(
            VelocityLaw::quadratic_greenshields(),
            PiecewiseConstantSpec::constant(1.0),
            PiecewiseConstantSpec::indicator(-0.5, 0.5, 0.5).unwrap(),
            NonlocalHorizon::new(1e-4).unwrap(),
            0.5,
            0.9,
        )
        .unwrap();
        let g = Grid::new(-1.0, 2.0, 3000).unwrap();
        let res = run(&cfg, &g, &OutputSchedule::Times(vec![0.5])).unwrap();
        let q = res.final_snapshot();
        let front = crate::diagnostics::first_crossing(q, 0.25).unwrap();
        let exact = -0.5 + 0.375;
        assert!(
            (front - exact).abs() <= 2.0 * g.dx(),
            "front {front} vs {exact}"
        );
    }
}
