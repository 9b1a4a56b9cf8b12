//! Finite-volume solvers for the nonlocal conservation law
//!
//! ```text
//! q_t + (v(x) q V(W))_x = 0,   W(t, x) = (1/η) ∫_x^∞ e^{(x−y)/η} v(y) q(t, y) dy
//! ```
//!
//! with a piecewise-constant speed `v`, and for its local limit `η → 0`,
//! together with diagnostics comparing the two.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod local;
pub mod nonlocal;
pub mod presets;
pub mod sim;
pub mod velocity;

pub use diagnostics::{
    entropy_residual, first_crossing, limit_error, max_principle_check, median_over,
    sup_l1_distance, sup_w_distance, tv_bounds_check, w_collapse, ConvergenceReport, EntropyReport,
    MaxPrincipleReport, TestFunction, TvReport,
};
pub use error::{Error, Result};
pub use grid::{mollify, norm_l1, norm_linf, sample, tv, CellField, Grid, PiecewiseConstantSpec};
pub use kernel::{check_w_identity, eval_w, eval_w_density, NonlocalHorizon};
pub use local::{
    godunov_solve, godunov_step, solve_local, transform_forward, transformed_initial_datum,
    CoordinateMap, GodunovFlux, TransformedGrid,
};
pub use nonlocal::{run, step, wave_speed_bound, ModelConfig, NonlocalProblem};
pub use presets::{Preset, REFERENCE_ETAS};
pub use sim::{OutputSchedule, SimResult, StepDiagnostics};
pub use velocity::{Polynomial, VelocityLaw};
