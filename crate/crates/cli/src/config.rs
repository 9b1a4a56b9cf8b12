//! JSON run descriptions.
//!
//! ```json
//! {"preset": "fig1",
//!  "grid": {"x_left": -2, "x_right": 3, "n_cells": 4000},
//!  "T": 1, "etas": [1, 0.1, 0.01, 0.001, 0.0001],
//!  "window": [-1.5, 2.5]}
//! ```
//!
//! Optional fields: `cfl` (default 0.9), `store_every`, `epsilons`,
//! `output_dir` (default `results`). The `custom` preset additionally needs
//! `v_spec`, `q0_spec` (`{"breakpoints": [...], "levels": [...]}`) and `V`,
//! the velocity polynomial's coefficients from low to high degree.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use singular_limit::{
    Grid, ModelConfig, NonlocalHorizon, NonlocalProblem, OutputSchedule, PiecewiseConstantSpec,
    Polynomial, Preset, VelocityLaw,
};

use crate::HarnessError;

/// Largest number of stored snapshots when `store_every` is not given.
pub const MAX_SNAPSHOTS: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetName {
    Fig1,
    Fig2,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub breakpoints: Vec<f64>,
    pub levels: Vec<f64>,
}

/// The file format, field for field.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRunSpec {
    pub preset: PresetName,
    pub grid: GridConfig,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub etas: Vec<f64>,
    #[serde(default)]
    pub cfl: Option<f64>,
    pub window: (f64, f64),
    #[serde(default)]
    pub store_every: Option<usize>,
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub v_spec: Option<SpecConfig>,
    #[serde(default)]
    pub q0_spec: Option<SpecConfig>,
    #[serde(default, rename = "V")]
    pub velocity: Option<Vec<f64>>,
}

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub preset: PresetName,
    pub grid: Grid,
    /// Model data; its horizon is the first (largest) entry of `etas`.
    pub model: ModelConfig,
    /// Strictly decreasing.
    pub etas: Vec<f64>,
    pub window: (f64, f64),
    pub store_every: usize,
    pub epsilons: Vec<f64>,
    pub output_dir: PathBuf,
}

impl RunSpec {
    pub fn t_final(&self) -> f64 {
        self.model.t_final
    }

    /// Stored times shared by every run of the spec: every `store_every`
    /// nonlocal CFL steps. The nonlocal step does not depend on `η`, so all
    /// horizons and the local reference are compared at the same instants.
    pub fn schedule(&self) -> Result<OutputSchedule, HarnessError> {
        let dt = NonlocalProblem::from_config(&self.model, &self.grid)?.time_step();
        Ok(OutputSchedule::uniform(
            self.store_every as f64 * dt,
            self.t_final(),
        ))
    }

    /// Same spec restricted to one horizon.
    pub fn with_single_eta(&self, eta: f64) -> Result<Self, HarnessError> {
        let horizon = NonlocalHorizon::new(eta)?;
        Ok(Self {
            etas: vec![eta],
            model: self.model.with_eta(horizon),
            ..self.clone()
        })
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn spec_from(cfg: &SpecConfig) -> Result<PiecewiseConstantSpec, HarnessError> {
    Ok(PiecewiseConstantSpec::new(
        cfg.breakpoints.clone(),
        cfg.levels.clone(),
    )?)
}

impl TryFrom<RawRunSpec> for RunSpec {
    type Error = HarnessError;

    fn try_from(raw: RawRunSpec) -> Result<Self, HarnessError> {
        let grid = Grid::new(raw.grid.x_left, raw.grid.x_right, raw.grid.n_cells)?;
        grid.check_window(raw.window)?;
        if raw.window.0 >= raw.window.1 {
            return Err(config_err("window must satisfy lo < hi"));
        }

        let (law, v_spec, q0_spec) = match raw.preset {
            PresetName::Custom => {
                let (Some(v), Some(q0), Some(coeffs)) = (&raw.v_spec, &raw.q0_spec, &raw.velocity)
                else {
                    return Err(config_err(
                        "preset \"custom\" requires the fields v_spec, q0_spec and V",
                    ));
                };
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(config_err("V coefficients must be finite"));
                }
                (
                    VelocityLaw::new(Polynomial::new(coeffs.clone())),
                    spec_from(v)?,
                    spec_from(q0)?,
                )
            }
            named => {
                if raw.v_spec.is_some() || raw.q0_spec.is_some() || raw.velocity.is_some() {
                    return Err(config_err(
                        "v_spec, q0_spec and V are only accepted with preset \"custom\"",
                    ));
                }
                let preset = if named == PresetName::Fig1 {
                    Preset::Fig1
                } else {
                    Preset::Fig2
                };
                (preset.law(), preset.v_spec(), preset.q0_spec())
            }
        };
        if let Some(&l) = v_spec.levels().iter().find(|&&l| l <= 0.0 || l.is_nan()) {
            return Err(config_err(format!(
                "v_spec level {l} is not positive; the speed needs v >= v_min > 0"
            )));
        }

        if raw.etas.is_empty() {
            return Err(config_err("etas must list at least one horizon"));
        }
        let mut etas = raw.etas.clone();
        for &eta in &etas {
            NonlocalHorizon::new(eta)?;
        }
        etas.sort_by(|a, b| b.total_cmp(a));
        etas.dedup();

        let epsilons = raw.epsilons.clone().unwrap_or_default();
        if let Some(&e) = epsilons.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
            return Err(config_err(format!(
                "mollification radius {e} must be positive"
            )));
        }

        let cfl = raw.cfl.unwrap_or(0.9);
        let model = ModelConfig::new(
            law,
            v_spec,
            q0_spec,
            NonlocalHorizon::new(etas[0])?,
            raw.t_final,
            cfl,
        )?;

        let store_every = match raw.store_every {
            Some(0) => return Err(config_err("store_every must be at least 1")),
            Some(k) => k,
            None => {
                let dt = NonlocalProblem::from_config(&model, &grid)?.time_step();
                let steps = if raw.t_final > 0.0 {
                    (raw.t_final / dt).ceil() as usize
                } else {
                    0
                };
                steps.div_ceil(MAX_SNAPSHOTS - 1).max(1)
            }
        };

        Ok(RunSpec {
            preset: raw.preset,
            grid,
            model,
            etas,
            window: raw.window,
            store_every,
            epsilons,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("results")),
        })
    }
}

pub fn parse_config(text: &str) -> Result<RunSpec, HarnessError> {
    let raw: RawRunSpec = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
    raw.try_into()
}

pub fn load_config(path: &Path) -> Result<RunSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|e| match e {
        HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"{"preset":"fig1","grid":{"x_left":-2,"x_right":3,"n_cells":4000},"T":1,"etas":[1,0.1,0.01,0.001,0.0001],"window":[-1.5,2.5]}"#;

    #[test]
    fn reference_config_parses_with_defaults() {
        let spec = parse_config(FIG1).unwrap();
        assert_eq!(spec.etas, vec![1.0, 0.1, 0.01, 0.001, 0.0001]);
        assert_eq!(spec.model.cfl, 0.9);
        assert_eq!(spec.grid.n_cells(), 4000);
        assert_eq!(spec.output_dir, PathBuf::from("results"));
        let OutputSchedule::Times(ts) = spec.schedule().unwrap() else {
            unreachable!()
        };
        assert!(ts.len() < MAX_SNAPSHOTS, "{} snapshots", ts.len() + 1);
        assert_eq!(*ts.last().unwrap(), 1.0);
    }

    #[test]
    fn fig2_preset_speed() {
        let spec = parse_config(&FIG1.replace("fig1", "fig2")).unwrap();
        assert_eq!(spec.model.v_spec.breakpoints(), &[0.0]);
        assert_eq!(spec.model.v_spec.levels(), &[0.5, 1.5]);
    }

    #[test]
    fn empty_etas_rejected() {
        let text = FIG1.replace("[1,0.1,0.01,0.001,0.0001]", "[]");
        assert!(matches!(parse_config(&text), Err(HarnessError::Config(_))));
    }

    #[test]
    fn unknown_and_missing_fields_are_named() {
        let text = FIG1.replace("\"T\":1", "\"T\":1,\"dt\":0.1");
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("dt") && msg.contains("etas"), "{msg}");

        let text = FIG1.replace(",\"window\":[-1.5,2.5]", "");
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("window"), "{msg}");
    }

    #[test]
    fn custom_requires_its_fields() {
        let text = FIG1.replace("fig1", "custom");
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("v_spec"), "{msg}");
    }

    #[test]
    fn nonpositive_speed_cites_v_min() {
        let text = FIG1.replace("fig1", "custom").replace(
            "\"window\"",
            r#""v_spec":{"breakpoints":[0],"levels":[1,0]},"q0_spec":{"breakpoints":[],"levels":[0.2]},"V":[1,0,-1],"window""#,
        );
        let msg = parse_config(&text).unwrap_err().to_string();
        assert!(msg.contains("v_min"), "{msg}");
    }

    #[test]
    fn custom_lwr_model() {
        let text = FIG1.replace("fig1", "custom").replace(
            "\"window\"",
            r#""v_spec":{"breakpoints":[],"levels":[1]},"q0_spec":{"breakpoints":[0],"levels":[0.8,0.1]},"V":[1,-1],"store_every":7,"window""#,
        );
        let spec = parse_config(&text).unwrap();
        assert_eq!(spec.store_every, 7);
        assert_eq!(spec.model.law.v(0.5), 0.5);
    }

    #[test]
    fn preset_rejects_custom_fields() {
        let text = FIG1.replace("\"window\"", r#""V":[1,0,-1],"window""#);
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn window_outside_grid() {
        let text = FIG1.replace("[-1.5,2.5]", "[-3,2.5]");
        assert!(matches!(parse_config(&text), Err(HarnessError::Model(_))));
    }

    #[test]
    fn etas_sorted_descending() {
        let spec =
            parse_config(&FIG1.replace("[1,0.1,0.01,0.001,0.0001]", "[0.01,1,0.1,1]")).unwrap();
        assert_eq!(spec.etas, vec![1.0, 0.1, 0.01]);
    }
}
