//! JSON run configuration. Every field has a default, so `{}` is a complete
//! config; unknown fields are rejected with their path.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adaptation::AdaptationConfig;
use crate::montecarlo::ScenarioConfig;
use crate::validate::ValidationPlan;

/// Either explicit values or an inclusive `start..=stop` range with `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, String> {
        match self {
            GridSpec::Values(v) => Ok(v.clone()),
            &GridSpec::Range { start, stop, step } => {
                if !(step > 0.0) || !(stop >= start) {
                    return Err(format!(
                        "grid range start={start} stop={stop} step={step} is empty"
                    ));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                // Rounded to 12 decimals so that 0.005 * k prints as written.
                Ok((0..count)
                    .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Uniform access probabilities of the equal sweep.
    pub equal: GridSpec,
    pub p_safe: GridSpec,
    pub p_unsafe: GridSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let pair_axis = vec![
            0.005, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.15, 0.2, 0.3,
        ];
        Self {
            equal: GridSpec::Range {
                start: 0.005,
                stop: 0.3,
                step: 0.005,
            },
            p_safe: GridSpec::Values(pair_axis.clone()),
            p_unsafe: GridSpec::Values(pair_axis),
        }
    }
}

/// Fixed chain geometry for the closed-form report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    /// Follower gaps in meters; defaults to the mean gap everywhere.
    pub gaps: Option<Vec<f64>>,
    /// Follower reaction times; defaults to the median everywhere.
    pub taus: Option<Vec<f64>>,
    /// Uniform access probability used when `p_access` is absent.
    pub p: f64,
    /// Per-vehicle access probabilities, leader first.
    pub p_access: Option<Vec<f64>>,
    /// Access probability of other-lane vehicles; defaults to `p`.
    pub background_p: Option<f64>,
    /// Position of the first vehicle of each other lane relative to the
    /// leader; defaults spread the lanes evenly inside one mean gap.
    pub lane_offsets: Option<Vec<f64>>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            gaps: None,
            taus: None,
            p: 0.05,
            p_access: None,
            background_p: None,
            lane_offsets: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub sweep: SweepConfig,
    pub adaptation: AdaptationConfig,
    pub analyze: AnalyzeConfig,
    pub validation: ValidationPlan,
}

impl RunConfig {
    /// Checks every section; returns a message suitable for the user.
    pub fn validate(&self) -> Result<(), String> {
        self.scenario
            .validate()
            .map_err(|e| format!("scenario: {e}"))?;
        self.adaptation
            .validate()
            .map_err(|e| format!("adaptation: {e}"))?;
        for (name, grid) in [
            ("sweep.equal", &self.sweep.equal),
            ("sweep.p_safe", &self.sweep.p_safe),
            ("sweep.p_unsafe", &self.sweep.p_unsafe),
        ] {
            let values = grid.values().map_err(|e| format!("{name}: {e}"))?;
            if values.is_empty() {
                return Err(format!("{name}: grid is empty"));
            }
            if let Some(p) = values.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
                return Err(format!("{name}: value {p} is outside (0, 1)"));
            }
        }
        let n = self.scenario.chain_length;
        let a = &self.analyze;
        let check_len = |name: &str, len: usize, want: usize| {
            if len == want {
                Ok(())
            } else {
                Err(format!("analyze.{name}: {len} entries, expected {want}"))
            }
        };
        if let Some(g) = &a.gaps {
            check_len("gaps", g.len(), n - 1)?;
            if g.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err("analyze.gaps: gaps must be positive".into());
            }
        }
        if let Some(t) = &a.taus {
            check_len("taus", t.len(), n - 1)?;
            if t.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return Err("analyze.taus: reaction times must be positive".into());
            }
        }
        if let Some(p) = &a.p_access {
            check_len("p_access", p.len(), n)?;
        }
        if let Some(o) = &a.lane_offsets {
            check_len("lane_offsets", o.len(), self.scenario.other_lanes.len())?;
        }
        let probs = std::iter::once(a.p)
            .chain(a.p_access.iter().flatten().copied())
            .chain(a.background_p);
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("analyze: access probability {p} is outside [0, 1]"));
            }
        }
        let v = &self.validation;
        if v.oracle_required > v.oracle_configs {
            return Err("validation.oracle_required exceeds validation.oracle_configs".into());
        }
        if v.oracle_slots == 0 || v.deadline_trials == 0 || !(v.kinematics_dt > 0.0) {
            return Err("validation: slot, trial and step counts must be positive".into());
        }
        Ok(())
    }
}

/// Parses a config or a previously written manifest (whose `config` field is
/// used). Errors carry the JSON path of the offending field and the position
/// in the file.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let is_manifest = value.get("manifest_version").is_some();
    let de = &mut serde_json::Deserializer::from_str(text);
    if is_manifest {
        let manifest: super::manifest::RunManifest =
            serde_path_to_error::deserialize(de).map_err(|e| describe(&e, "manifest"))?;
        Ok(manifest.config)
    } else {
        serde_path_to_error::deserialize(de).map_err(|e| describe(&e, "config"))
    }
}

fn describe(e: &serde_path_to_error::Error<serde_json::Error>, what: &str) -> String {
    let inner = e.inner();
    format!(
        "{what} field `{}`: {} (line {}, column {})",
        e.path(),
        strip_position(&inner.to_string()),
        inner.line(),
        inner.column()
    )
}

fn strip_position(msg: &str) -> &str {
    msg.rsplit_once(" at line ").map_or(msg, |(head, _)| head)
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, String> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}
