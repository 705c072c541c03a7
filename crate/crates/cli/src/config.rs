//! JSON scenario files.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ambient_attitude::controllers::{Controller, GainSet, Variant};
use ambient_attitude::dynamics::RigidState;
use ambient_attitude::reference::{Equilibrium, Horizon, ReferenceTrajectory, TumblingReference};
use ambient_attitude::simulate::{Scenario, SimConfig, DEFAULT_LOG_STRIDE};
use ambient_attitude::so3::{exp_so3, from_row_major, Mat3, Vec3};
use serde::Deserialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Name of the built-in tumbling reference.
pub const TUMBLING_REFERENCE: &str = "paper_fig2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Stabilize,
    Track,
    OpenLoop,
}

impl From<ScenarioName> for Scenario {
    fn from(s: ScenarioName) -> Self {
        match s {
            ScenarioName::Stabilize => Scenario::Stabilize,
            ScenarioName::Track => Scenario::Track,
            ScenarioName::OpenLoop => Scenario::OpenLoop,
        }
    }
}

/// Raw scenario document, as deserialized.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: ScenarioName,
    pub k_e: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_log_stride")]
    pub log_stride: usize,
    #[serde(default)]
    pub gains: Option<GainsFile>,
    pub initial: InitialFile,
    pub reference: Value,
    #[serde(default)]
    pub output_csv: Option<PathBuf>,
}

fn default_log_stride() -> usize {
    DEFAULT_LOG_STRIDE
}

/// Gains; matrices are row-major 9-arrays.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsFile {
    pub variant: String,
    #[serde(rename = "KP", default)]
    pub kp_matrix: Option<[f64; 9]>,
    #[serde(rename = "KD", default)]
    pub kd: Option<[f64; 9]>,
    #[serde(rename = "KI", default)]
    pub ki: Option<[f64; 9]>,
    #[serde(rename = "kP", default)]
    pub kp_scalar: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialFile {
    #[serde(rename = "R", default)]
    pub r: Option<[f64; 9]>,
    #[serde(default)]
    pub axis_angle: Option<[f64; 3]>,
    #[serde(rename = "Omega")]
    pub omega: [f64; 3],
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub sim: SimConfig,
    pub output_csv: Option<PathBuf>,
    pub reference_name: String,
}

fn schema(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Schema(format!("{path}: {msg}"))
}

fn finite<const N: usize>(path: &str, values: &[f64; N]) -> CliResult<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(schema(path, "entries must be finite"))
    }
}

fn matrix(path: &str, values: Option<[f64; 9]>) -> CliResult<Mat3> {
    let values = values.ok_or_else(|| schema(path, "missing field"))?;
    finite(path, &values)?;
    Ok(from_row_major(&values))
}

fn scalar(path: &str, value: Option<f64>) -> CliResult<f64> {
    match value {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(schema(path, format!("must be finite, got {v}"))),
        None => Err(schema(path, "missing field")),
    }
}

fn reject_extra(path: &str, present: bool, variant: Variant) -> CliResult<()> {
    if present {
        Err(schema(path, format!("not used by {variant}")))
    } else {
        Ok(())
    }
}

impl GainsFile {
    pub fn to_gain_set(&self) -> CliResult<GainSet> {
        let variant: Variant = self.variant.parse().map_err(|e| schema("gains.variant", e))?;
        let matrix_kp = |g: &Self| matrix("gains.KP", g.kp_matrix);
        let kd = matrix("gains.KD", self.kd)?;
        let gains = match variant {
            Variant::Pd | Variant::TrackFull => {
                reject_extra("gains.KI", self.ki.is_some(), variant)?;
                reject_extra("gains.kP", self.kp_scalar.is_some(), variant)?;
                reject_extra("gains.eps", self.eps.is_some(), variant)?;
                let kp = matrix_kp(self)?;
                if variant == Variant::Pd {
                    GainSet::Pd { kp, kd }
                } else {
                    GainSet::TrackFull { kp, kd }
                }
            }
            Variant::Pid | Variant::TrackPid => {
                reject_extra("gains.kP", self.kp_scalar.is_some(), variant)?;
                reject_extra("gains.eps", self.eps.is_some(), variant)?;
                let kp = matrix_kp(self)?;
                let ki = matrix("gains.KI", self.ki)?;
                if variant == Variant::Pid {
                    GainSet::Pid { kp, kd, ki }
                } else {
                    GainSet::TrackPid { kp, kd, ki }
                }
            }
            Variant::TrackPd | Variant::TrackPdEps => {
                reject_extra("gains.KP", self.kp_matrix.is_some(), variant)?;
                reject_extra("gains.KI", self.ki.is_some(), variant)?;
                let kp = scalar("gains.kP", self.kp_scalar)?;
                if variant == Variant::TrackPd {
                    reject_extra("gains.eps", self.eps.is_some(), variant)?;
                    GainSet::TrackPd { kp, kd }
                } else {
                    GainSet::TrackPdEps {
                        kp,
                        kd,
                        eps: scalar("gains.eps", self.eps)?,
                    }
                }
            }
        };
        Ok(gains)
    }
}

impl InitialFile {
    pub fn to_state(&self) -> CliResult<RigidState> {
        let r = match (self.r, self.axis_angle) {
            (Some(r), None) => matrix("initial.R", Some(r))?,
            (None, Some(v)) => {
                finite("initial.axis_angle", &v)?;
                exp_so3(&Vec3::from(v))
            }
            (Some(_), Some(_)) => return Err(schema("initial", "give either R or axis_angle, not both")),
            (None, None) => return Err(schema("initial", "one of R or axis_angle is required")),
        };
        finite("initial.Omega", &self.omega)?;
        Ok(RigidState::new(r, Vec3::from(self.omega)))
    }
}

/// Resolves the `reference` field for a run ending at `t_final`.
fn reference(value: &Value, scenario: ScenarioName, t_final: f64) -> CliResult<(Arc<dyn ReferenceTrajectory>, String)> {
    match value {
        Value::String(s) if s == TUMBLING_REFERENCE => {
            if scenario == ScenarioName::Stabilize {
                return Err(schema("reference", "stabilize needs a constant {\"R0\": [...]} reference"));
            }
            let horizon = Horizon::new(0.0, t_final).map_err(|e| schema("t_final", e))?;
            Ok((Arc::new(TumblingReference::new(horizon)), TUMBLING_REFERENCE.to_owned()))
        }
        Value::String(s) if s == "custom" => Err(schema(
            "reference",
            "custom references are not supported; use \"paper_fig2\" or {\"R0\": [...]}",
        )),
        Value::Object(map) => {
            if let Some(extra) = map.keys().find(|k| k.as_str() != "R0") {
                return Err(schema(&format!("reference.{extra}"), "unknown field"));
            }
            let raw = map.get("R0").ok_or_else(|| schema("reference.R0", "missing field"))?;
            let values: [f64; 9] = serde_json::from_value(raw.clone()).map_err(|e| schema("reference.R0", e))?;
            let r0 = matrix("reference.R0", Some(values))?;
            let eq = Equilibrium::new(r0).map_err(|e| schema("reference.R0", e))?;
            Ok((Arc::new(eq), "constant".to_owned()))
        }
        other => Err(schema(
            "reference",
            format!("expected \"{TUMBLING_REFERENCE}\" or {{\"R0\": [...]}}, got {other}"),
        )),
    }
}

impl ScenarioFile {
    /// Deserializes a document, reporting the failing field path on error.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Schema(inner.to_string())
            } else {
                schema(&path, inner)
            }
        })
    }

    /// Validates the document and runs the gain gate.
    pub fn into_config(self) -> CliResult<ParsedConfig> {
        for (path, v) in [("k_e", self.k_e), ("dt", self.dt), ("t_final", self.t_final)] {
            if !v.is_finite() {
                return Err(schema(path, format!("must be finite, got {v}")));
            }
        }
        if self.dt <= 0.0 {
            return Err(schema("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.t_final < self.dt {
            return Err(schema("t_final", format!("must be at least dt, got {}", self.t_final)));
        }
        if self.k_e < 0.0 {
            return Err(schema("k_e", format!("must be non-negative, got {}", self.k_e)));
        }
        if self.log_stride == 0 {
            return Err(schema("log_stride", "must be at least 1"));
        }
        let initial = self.initial.to_state()?;
        let (reference, reference_name) = reference(&self.reference, self.scenario, self.t_final)?;
        let gains = match (&self.gains, self.scenario) {
            (Some(g), _) => Some(g.to_gain_set()?),
            (None, ScenarioName::OpenLoop) => None,
            (None, _) => return Err(schema("gains", "missing field")),
        };
        if let Some(g) = &gains {
            let tracking = g.variant().is_tracking();
            match self.scenario {
                ScenarioName::Stabilize if tracking => {
                    return Err(schema("gains.variant", format!("{} cannot stabilize; use PD or PID", g.variant())))
                }
                ScenarioName::Track if !tracking => {
                    return Err(schema("gains.variant", format!("{} cannot track; use a TRACK_* variant", g.variant())))
                }
                _ => {}
            }
        }
        let controller = gains.map(Controller::new).transpose()?;
        let sim = SimConfig {
            dt: self.dt,
            t_final: self.t_final,
            k_e: self.k_e,
            scenario: self.scenario.into(),
            controller,
            initial,
            reference,
            log_stride: self.log_stride,
            inertia: None,
        };
        sim.validate()?;
        Ok(ParsedConfig {
            sim,
            output_csv: self.output_csv,
            reference_name,
        })
    }
}

/// Reads and validates a scenario file.
pub fn parse_config(path: &Path) -> CliResult<ParsedConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    ScenarioFile::from_json(&text)?.into_config()
}
