//! η-sweeps against the local reference solution.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use singular_limit::{
    entropy_residual, limit_error, max_principle_check, mollify, sample, solve_local,
    sup_l1_distance, sup_w_distance, tv_bounds_check, CellField, ConvergenceReport,
    NonlocalHorizon, NonlocalProblem, OutputSchedule, SimResult, TestFunction,
};

use crate::config::RunSpec;
use crate::output::{
    emit_heatmap_data, eta_file, num, opt_num, write_diagnostics, write_rows, MOLLIFY_HEADER,
    SUMMARY_HEADER,
};
use crate::HarnessError;

/// One line of `summary.csv`. Metrics are `None` when the run failed or the
/// check does not apply.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub eta: f64,
    pub q_error: Option<f64>,
    pub w_error: Option<f64>,
    pub max_principle_violation: Option<f64>,
    /// Empty when the speed jumps upwards and the bound is infinite.
    pub tv_ratio: Option<f64>,
    /// Smallest entropy functional over the built-in test functions.
    pub entropy_min: Option<f64>,
    pub status: String,
}

impl SummaryRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn failed(eta: f64, err: &HarnessError) -> Self {
        Self {
            eta,
            q_error: None,
            w_error: None,
            max_principle_violation: None,
            tv_ratio: None,
            entropy_min: None,
            // keep the CSV single-line and comma-free
            status: format!("error: {err}").replace([',', '\n'], ";"),
        }
    }

    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.eta,
            opt_num(self.q_error),
            opt_num(self.w_error),
            opt_num(self.max_principle_violation),
            opt_num(self.tv_ratio),
            opt_num(self.entropy_min),
            self.status
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifyRow {
    pub eta: f64,
    pub epsilon: f64,
    pub q_distance: Option<f64>,
    pub w_distance: Option<f64>,
    /// `sup_t tv(W)` of the mollified run, i.e. `‖∂ₓW‖_{L¹}`.
    pub w_tv_max: Option<f64>,
    pub status: String,
}

impl MollifyRow {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.eta,
            self.epsilon,
            opt_num(self.q_distance),
            opt_num(self.w_distance),
            opt_num(self.w_tv_max),
            self.status
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// One row per horizon, largest first.
    pub rows: Vec<SummaryRow>,
    pub mollify_rows: Vec<MollifyRow>,
    /// Errors of the successful runs.
    pub report: ConvergenceReport,
}

impl SweepOutcome {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(SummaryRow::ok) && self.mollify_rows.iter().all(|r| r.status == "ok")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    pub quiet: bool,
}

struct Shared<'a> {
    spec: &'a RunSpec,
    schedule: OutputSchedule,
    v: CellField,
    local: SimResult,
    family: Vec<TestFunction>,
    entropy_applies: bool,
    out: &'a Path,
    quiet: bool,
}

fn log(quiet: bool, msg: impl FnOnce() -> String) {
    if !quiet {
        eprintln!("{}", msg());
    }
}

/// Local reference solution on the spec's grid, written to
/// `local_reference.csv` and `diag_local.csv`.
pub fn run_local(
    spec: &RunSpec,
    out: &Path,
    opts: SweepOptions,
) -> Result<SimResult, HarnessError> {
    create_dir(out)?;
    let started = Instant::now();
    let local = solve_local(&spec.model, &spec.grid, &spec.schedule()?)?;
    let v = sample(&spec.model.v_spec, &spec.grid);
    emit_heatmap_data(&local, &v, &out.join("local_reference.csv"))?;
    write_diagnostics(&local, &out.join("diag_local.csv"))?;
    log(opts.quiet, || {
        format!("local reference: {:.2?}", started.elapsed())
    });
    Ok(local)
}

fn create_dir(out: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(out).map_err(|source| HarnessError::Io {
        path: out.to_path_buf(),
        source,
    })
}

/// Runs the local reference once and the nonlocal solver for every horizon
/// in parallel. A failing horizon is reported in its summary row and does not
/// stop the others.
pub fn run_sweep(
    spec: &RunSpec,
    out: &Path,
    opts: SweepOptions,
) -> Result<SweepOutcome, HarnessError> {
    let local = run_local(spec, out, opts)?;
    let t_final = spec.t_final();
    let rho_sup = spec.model.rho_sup();
    let shared = Shared {
        spec,
        schedule: spec.schedule()?,
        v: sample(&spec.model.v_spec, &spec.grid),
        local,
        family: if t_final > 0.0 {
            TestFunction::builtin_family(t_final, spec.window)
        } else {
            Vec::new()
        },
        entropy_applies: t_final > 0.0 && spec.model.law.flux_strictly_concave_on(rho_sup),
        out,
        quiet: opts.quiet,
    };

    let results: Vec<(SummaryRow, Vec<MollifyRow>)> = spec
        .etas
        .par_iter()
        .map(|&eta| match run_one(&shared, eta) {
            Ok(res) => res,
            Err(e) => {
                log(opts.quiet, || format!("eta = {eta}: {e}"));
                (SummaryRow::failed(eta, &e), Vec::new())
            }
        })
        .collect();
    let (rows, mollify_rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let mollify_rows: Vec<MollifyRow> = mollify_rows.into_iter().flatten().collect();

    write_rows(
        &out.join("summary.csv"),
        SUMMARY_HEADER,
        &rows.iter().map(SummaryRow::to_csv).collect::<Vec<_>>(),
    )?;
    if !spec.epsilons.is_empty() {
        write_rows(
            &out.join("mollify.csv"),
            MOLLIFY_HEADER,
            &mollify_rows
                .iter()
                .map(MollifyRow::to_csv)
                .collect::<Vec<_>>(),
        )?;
    }

    let good: Vec<&SummaryRow> = rows.iter().filter(|r| r.ok()).collect();
    let report = ConvergenceReport::new(
        good.iter().map(|r| r.eta).collect(),
        good.iter().map(|r| r.q_error.unwrap_or(f64::NAN)).collect(),
        good.iter().map(|r| r.w_error.unwrap_or(f64::NAN)).collect(),
    )?;
    Ok(SweepOutcome {
        rows,
        mollify_rows,
        report,
    })
}

fn run_one(ctx: &Shared<'_>, eta: f64) -> Result<(SummaryRow, Vec<MollifyRow>), HarnessError> {
    let started = Instant::now();
    let spec = ctx.spec;
    let cfg = spec.model.with_eta(NonlocalHorizon::new(eta)?);
    let problem = NonlocalProblem::from_config(&cfg, &spec.grid)?;
    let sim = problem.run(&ctx.schedule)?;

    emit_heatmap_data(&sim, &ctx.v, &eta_file(ctx.out, "heatmap", eta))?;
    write_diagnostics(&sim, &eta_file(ctx.out, "diag", eta))?;

    let (q_error, w_error) = limit_error(&sim, &ctx.local, &ctx.v, spec.window)?;
    let mp = max_principle_check(&sim, &ctx.v)?;
    let tv = tv_bounds_check(&sim, &cfg, cfg.v_spec.osl_constant());
    let entropy_min = if ctx.entropy_applies {
        let mut worst = f64::INFINITY;
        for phi in &ctx.family {
            worst = worst.min(entropy_residual(&sim, &ctx.v, &cfg.law, phi, spec.window)?.value);
        }
        Some(worst)
    } else {
        None
    };

    let mollify_rows = spec
        .epsilons
        .iter()
        .map(|&epsilon| {
            mollified_run(&problem, &sim, eta, epsilon, ctx).unwrap_or_else(|e| MollifyRow {
                eta,
                epsilon,
                q_distance: None,
                w_distance: None,
                w_tv_max: None,
                status: format!("error: {e}").replace([',', '\n'], ";"),
            })
        })
        .collect();

    log(ctx.quiet, || {
        format!(
            "eta = {eta}: q_error {} w_error {} ({:.2?})",
            num(q_error),
            num(w_error),
            started.elapsed()
        )
    });
    Ok((
        SummaryRow {
            eta,
            q_error: Some(q_error),
            w_error: Some(w_error),
            max_principle_violation: Some(mp.violation()),
            tv_ratio: tv.bound_finite.then_some(tv.max_ratio),
            entropy_min,
            status: "ok".into(),
        },
        mollify_rows,
    ))
}

fn mollified_run(
    problem: &NonlocalProblem,
    reference: &SimResult,
    eta: f64,
    epsilon: f64,
    ctx: &Shared<'_>,
) -> Result<MollifyRow, HarnessError> {
    let spec = ctx.spec;
    let smoothed = NonlocalProblem::from_fields(
        mollify(problem.v(), epsilon)?,
        mollify(problem.q0(), epsilon)?,
        spec.model.law.clone(),
        problem.eta(),
        spec.t_final(),
        spec.model.cfl,
    )?;
    let sim = smoothed.run(&ctx.schedule)?;
    Ok(MollifyRow {
        eta,
        epsilon,
        q_distance: Some(sup_l1_distance(&sim, reference, spec.window)?),
        w_distance: Some(sup_w_distance(&sim, reference)?),
        w_tv_max: Some(sim.diagnostics.iter().map(|d| d.tv).fold(0.0, f64::max)),
        status: "ok".into(),
    })
}
