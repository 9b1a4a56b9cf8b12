use thiserror::Error;

/// Errors raised by grid construction, solvers and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid piecewise-constant description: {0}")]
    InvalidSpec(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("window [{lo}, {hi}] is not contained in the grid [{x_left}, {x_right}]")]
    WindowOutsideGrid {
        lo: f64,
        hi: f64,
        x_left: f64,
        x_right: f64,
    },

    #[error("nonlocal horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),

    #[error("time step {dt} exceeds the CFL limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("non-finite value {value} in cell {cell} at step {step} (t = {time})")]
    NonFinite {
        step: usize,
        time: f64,
        cell: usize,
        value: f64,
    },

    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),

    #[error("stored times of the two results differ")]
    TimeMismatch,

    #[error("test function support [{lo}, {hi}] leaves the window [{w_lo}, {w_hi}]")]
    SupportOutsideWindow {
        lo: f64,
        hi: f64,
        w_lo: f64,
        w_hi: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
