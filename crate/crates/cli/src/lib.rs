//! Configuration, η-sweeps and CSV output for the singular-limit solvers.

pub mod config;
pub mod output;
pub mod sweep;

use std::path::PathBuf;

pub use config::{load_config, parse_config, PresetName, RunSpec};
pub use output::{emit_heatmap_data, read_heatmap};
pub use sweep::{run_local, run_sweep, MollifyRow, SummaryRow, SweepOptions, SweepOutcome};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] singular_limit::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: malformed line {line}", path.display())]
    Parse { path: PathBuf, line: usize },
}
