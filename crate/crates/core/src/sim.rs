//! Time-stepping bookkeeping shared by the nonlocal and local solvers.

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid};

/// When a solver stores full snapshots.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputSchedule {
    /// Every `k` time steps, plus the final time.
    EverySteps(usize),
    /// At the given times (clipped to `(0, T]`); steps are shortened to land
    /// exactly on them. Time zero and `T` are always stored.
    Times(Vec<f64>),
}

impl OutputSchedule {
    /// Uniform times `k · spacing` below `t_final`, followed by `t_final`.
    pub fn uniform(spacing: f64, t_final: f64) -> Self {
        let mut times = Vec::new();
        if spacing > 0.0 {
            let mut k = 1usize;
            loop {
                let t = k as f64 * spacing;
                if t >= t_final * (1.0 - 1e-12) {
                    break;
                }
                times.push(t);
                k += 1;
            }
        }
        times.push(t_final);
        OutputSchedule::Times(times)
    }

    /// Output targets strictly inside `(0, t_final]`, ending with `t_final`.
    pub(crate) fn targets(&self, t_final: f64) -> Vec<f64> {
        let mut targets: Vec<f64> = match self {
            OutputSchedule::EverySteps(_) => Vec::new(),
            OutputSchedule::Times(ts) => ts
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t < t_final)
                .collect(),
        };
        targets.sort_by(f64::total_cmp);
        targets.dedup();
        if t_final > 0.0 {
            targets.push(t_final);
        }
        targets
    }

    pub(crate) fn every(&self) -> Option<usize> {
        match self {
            OutputSchedule::EverySteps(k) => Some((*k).max(1)),
            OutputSchedule::Times(_) => None,
        }
    }
}

/// Per-step record of the state at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    /// Step taken from this state (zero for the final record).
    pub dt: f64,
    /// `Σ q_i dx` (for the local solver: `Σ p_j dy`, equal by the change of variables).
    pub mass: f64,
    /// Mass that left through the boundaries up to `time` (net of inflow).
    pub outflow: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// TV of the look-ahead field `W` (nonlocal) or of `p` (local).
    pub tv: f64,
}

/// Stored snapshots and per-step diagnostics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub grid: Grid,
    pub times: Vec<f64>,
    /// `q` at each stored time.
    pub snapshots: Vec<CellField>,
    /// `W` at each stored time; empty for local solutions.
    pub w_snapshots: Vec<CellField>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl SimResult {
    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("a result holds at least the initial state")
    }

    pub fn final_snapshot(&self) -> &CellField {
        self.snapshots
            .last()
            .expect("a result holds at least the initial state")
    }

    /// Snapshot index stored at exactly `t`, if any.
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }

    /// Worst `|mass(t) − mass(0) + outflow(t)|` over all recorded steps.
    pub fn mass_defect(&self) -> f64 {
        let m0 = self.diagnostics.first().map_or(0.0, |d| d.mass);
        self.diagnostics
            .iter()
            .map(|d| (d.mass - m0 + d.outflow).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_same_times(&self, other: &SimResult) -> Result<()> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
        {
            return Err(Error::TimeMismatch);
        }
        Ok(())
    }
}

/// Decides step sizes and storage points for an explicit scheme with a fixed
/// CFL step.
pub(crate) struct Clock {
    t_final: f64,
    dt_cfl: f64,
    targets: Vec<f64>,
    next: usize,
    every: Option<usize>,
    pub(crate) time: f64,
    pub(crate) step: usize,
}

impl Clock {
    pub(crate) fn new(schedule: &OutputSchedule, t_final: f64, dt_cfl: f64) -> Self {
        Self {
            t_final,
            dt_cfl,
            targets: schedule.targets(t_final),
            next: 0,
            every: schedule.every(),
            time: 0.0,
            step: 0,
        }
    }

    pub(crate) fn done(&self) -> bool {
        self.next >= self.targets.len()
    }

    /// Step size for the next step and whether it lands on an output target.
    pub(crate) fn propose(&self) -> (f64, bool) {
        let target = self.targets[self.next];
        let remaining = target - self.time;
        // avoid a sliver step right before a target
        if remaining <= self.dt_cfl * (1.0 + 1e-9) {
            (remaining, true)
        } else {
            (self.dt_cfl, false)
        }
    }

    /// Advances the clock; returns whether the new state should be stored.
    pub(crate) fn advance(&mut self, dt: f64, lands: bool) -> bool {
        self.step += 1;
        if lands {
            self.time = self.targets[self.next];
            self.next += 1;
        } else {
            self.time += dt;
        }
        let at_end = self.time == self.t_final;
        match self.every {
            Some(k) => at_end || self.step.is_multiple_of(k),
            None => lands,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_schedule_ends_at_final_time() {
        let OutputSchedule::Times(ts) = OutputSchedule::uniform(0.25, 1.0) else {
            unreachable!()
        };
        assert_eq!(ts, vec![0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn clock_lands_on_targets() {
        let schedule = OutputSchedule::Times(vec![0.3, 0.0, 5.0, 0.3]);
        let mut clock = Clock::new(&schedule, 1.0, 0.125);
        let mut stored = Vec::new();
        while !clock.done() {
            let (dt, lands) = clock.propose();
            assert!(dt <= 0.125 * (1.0 + 1e-9) && dt > 0.0);
            if clock.advance(dt, lands) {
                stored.push(clock.time);
            }
        }
        assert_eq!(stored, vec![0.3, 1.0]);
    }

    #[test]
    fn clock_every_k_steps() {
        let mut clock = Clock::new(&OutputSchedule::EverySteps(3), 1.0, 0.1);
        let mut stored = Vec::new();
        while !clock.done() {
            let (dt, lands) = clock.propose();
            if clock.advance(dt, lands) {
                stored.push(clock.step);
            }
        }
        assert_eq!(stored, vec![3, 6, 9, 10]);
        assert_eq!(clock.time, 1.0);
    }

    #[test]
    fn zero_horizon_has_no_steps() {
        let clock = Clock::new(&OutputSchedule::EverySteps(1), 0.0, 0.1);
        assert!(clock.done());
    }
}
