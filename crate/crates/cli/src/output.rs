//! CSV writers. Floating-point columns use 17 significant digits so values
//! survive a write/read round trip unchanged.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use singular_limit::{CellField, SimResult};

use crate::HarnessError;

/// Header of the heatmap files: time, cell center, `q` and `v·q`.
pub const HEATMAP_HEADER: &str = "t,x,q,vq";

pub const DIAGNOSTICS_HEADER: &str = "step,t,dt,mass,outflow,rho_min,rho_max,tv";

pub const SUMMARY_HEADER: &str =
    "eta,q_error,w_error,max_principle_violation,tv_ratio,entropy_min,status";

pub const MOLLIFY_HEADER: &str = "eta,epsilon,q_distance,w_distance,w_tv_max,status";

pub(crate) fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One row per stored time and cell, `snapshots × cells` rows in total,
/// below [`HEATMAP_HEADER`].
pub fn emit_heatmap_data(sim: &SimResult, v: &CellField, path: &Path) -> Result<(), HarnessError> {
    let grid = sim.grid;
    let mut out = String::with_capacity(64 * sim.snapshots.len() * grid.n_cells() + 16);
    out.push_str(HEATMAP_HEADER);
    out.push('\n');
    for (t, q) in sim.times.iter().zip(&sim.snapshots) {
        for (i, (&qi, &vi)) in q.values().iter().zip(v.values()).enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                num(*t),
                num(grid.center(i)),
                num(qi),
                num(vi * qi)
            );
        }
    }
    write_file(path, &out)
}

/// Reads a heatmap file back as `(t, x, q, vq)` rows.
pub fn read_heatmap(path: &Path) -> Result<Vec<[f64; 4]>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bad = |line: usize| HarnessError::Parse {
        path: path.to_path_buf(),
        line,
    };
    let mut lines = text.lines();
    if lines.next() != Some(HEATMAP_HEADER) {
        return Err(bad(1));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let mut row = [0.0; 4];
            let mut fields = line.split(',');
            for slot in &mut row {
                *slot = fields
                    .next()
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| bad(k + 2))?;
            }
            if fields.next().is_some() {
                return Err(bad(k + 2));
            }
            Ok(row)
        })
        .collect()
}

pub fn write_diagnostics(sim: &SimResult, path: &Path) -> Result<(), HarnessError> {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for d in &sim.diagnostics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            d.step,
            num(d.time),
            num(d.dt),
            num(d.mass),
            num(d.outflow),
            num(d.rho_min),
            num(d.rho_max),
            num(d.tv)
        );
    }
    write_file(path, &out)
}

pub(crate) fn write_rows(path: &Path, header: &str, rows: &[String]) -> Result<(), HarnessError> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    write_file(path, &out)
}

/// `<dir>/<stem>_eta_<η>.csv`.
pub fn eta_file(dir: &Path, stem: &str, eta: f64) -> PathBuf {
    dir.join(format!("{stem}_eta_{eta}.csv"))
}
