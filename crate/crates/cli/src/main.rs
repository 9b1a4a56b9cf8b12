use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use singular_limit_harness::{load_config, run_local, run_sweep, RunSpec, SweepOptions};

#[derive(Parser)]
#[command(
    name = "singular-limit",
    version,
    about = "Nonlocal-to-local sweeps for conservation laws with a discontinuous speed"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (overrides `output_dir` from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Local reference plus every horizon listed in the config.
    Sweep { config: PathBuf },
    /// Local reference plus a single horizon.
    Single {
        config: PathBuf,
        #[arg(long)]
        eta: f64,
    },
    /// Local reference only.
    Local { config: PathBuf },
}

fn load(path: &Path) -> Result<RunSpec> {
    load_config(path).with_context(|| format!("loading {}", path.display()))
}

fn sweep(spec: &RunSpec, out: &Path, opts: SweepOptions) -> Result<bool> {
    let outcome = run_sweep(spec, out, opts)?;
    if !opts.quiet {
        for row in &outcome.rows {
            eprintln!("{:>10}  {}", row.eta, row.status);
        }
        eprintln!("results in {}", out.display());
    }
    Ok(outcome.all_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = SweepOptions { quiet: cli.quiet };
    let result = (|| -> Result<bool> {
        let (config, single) = match &cli.command {
            Command::Sweep { config } => (config, None),
            Command::Single { config, eta } => (config, Some(*eta)),
            Command::Local { config } => (config, None),
        };
        let mut spec = load(config)?;
        if let Some(eta) = single {
            spec = spec.with_single_eta(eta)?;
        }
        let out = cli.out.clone().unwrap_or_else(|| spec.output_dir.clone());
        match cli.command {
            Command::Local { .. } => {
                run_local(&spec, &out, opts)?;
                Ok(true)
            }
            _ => sweep(&spec, &out, opts),
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
