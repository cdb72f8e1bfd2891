//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "name": "maxmin",
//!   "kind": "MaxMinSweep",
//!   "K": 3, "Nt": 3, "sigma2": 1.0,
//!   "snr_db": [5, 10, 15, 20, 25, 30, 35],
//!   "delta": 0.1,
//!   "channels": 20,
//!   "seed": 1,
//!   "ao": { "tol_rel": 1e-4, "max_iter": 200, "bootstrap_max": 10, "init_strategy": "MrtEqualSplit" },
//!   "oracle_samples": 2000
//! }
//! ```
//!
//! `delta` is a radius, a list of radii (power feasibility only) or
//! `{"delta0": 0.1, "alpha": 0.5, "scale": 10}` for `δ = δ₀ √(scale · P_t^{−α})`.
//! `P_t = σ² · 10^{snr_db/10}`. Unknown keys are rejected.
//!
//! Defaults: `name` = kind in lower case, `sigma2` = 1, `snr_db` = [] (not
//! used by `PowerFeasibility`), `target_rate` = none, `ao` as above,
//! `oracle_samples` = 2000, `dof_fit_points` = 4 (DoF slopes are fitted on
//! this many of the highest SNR points, 3 to 6).

use std::path::Path;

use rsbeam_core::ao::{AoConfig, InitStrategy};
use rsbeam_core::uncertainty::RadiusLaw;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    MaxMinSweep,
    PowerFeasibility,
    DofSweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusLawSpec {
    pub delta0: f64,
    pub alpha: f64,
    pub scale: f64,
}

impl RadiusLawSpec {
    pub fn law(&self) -> RadiusLaw {
        RadiusLaw {
            delta0: self.delta0,
            alpha: self.alpha,
            scale: self.scale,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Fixed(f64),
    Grid(Vec<f64>),
    Law(RadiusLawSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitName {
    MrtEqualSplit,
    ZfEqualSplit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AoSettings {
    pub tol_rel: f64,
    pub max_iter: usize,
    pub bootstrap_max: usize,
    pub init_strategy: InitName,
}

impl Default for AoSettings {
    fn default() -> Self {
        let d = AoConfig::default();
        Self {
            tol_rel: d.tol_rel,
            max_iter: d.max_iter,
            bootstrap_max: d.bootstrap_max,
            init_strategy: InitName::MrtEqualSplit,
        }
    }
}

impl AoSettings {
    pub fn to_ao_config(&self) -> AoConfig {
        AoConfig {
            tol_rel: self.tol_rel,
            max_iter: self.max_iter,
            bootstrap_max: self.bootstrap_max,
            init: match self.init_strategy {
                InitName::MrtEqualSplit => InitStrategy::MrtEqualSplit,
                InitName::ZfEqualSplit => InitStrategy::ZfEqualSplit,
            },
            ..AoConfig::default()
        }
    }
}

fn default_sigma2() -> f64 {
    1.0
}

fn default_oracle_samples() -> usize {
    2000
}

fn default_dof_fit_points() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub kind: ExperimentKind,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "Nt")]
    pub nt: usize,
    #[serde(default = "default_sigma2")]
    pub sigma2: f64,
    #[serde(default)]
    pub snr_db: Vec<f64>,
    pub delta: DeltaSpec,
    pub channels: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_rate: Option<f64>,
    #[serde(default)]
    pub ao: AoSettings,
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
    #[serde(default = "default_dof_fit_points")]
    pub dof_fit_points: usize,
}

impl ExperimentConfig {
    pub fn experiment_id(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            match self.kind {
                ExperimentKind::MaxMinSweep => "maxmin",
                ExperimentKind::PowerFeasibility => "minpower",
                ExperimentKind::DofSweep => "dof",
            }
            .to_string()
        })
    }

    pub fn pt(&self, snr_db: f64) -> f64 {
        self.sigma2 * 10f64.powf(snr_db / 10.0)
    }

    /// Radius at `snr_db` for a fixed radius or a law.
    pub fn delta_at(&self, snr_db: f64) -> f64 {
        match &self.delta {
            DeltaSpec::Fixed(d) => *d,
            DeltaSpec::Grid(g) => g[0],
            DeltaSpec::Law(l) => l.law().radius_at(self.pt(snr_db)),
        }
    }

    /// Radii of a power-feasibility grid.
    pub fn delta_grid(&self) -> Vec<f64> {
        match &self.delta {
            DeltaSpec::Fixed(d) => vec![*d],
            DeltaSpec::Grid(g) => g.clone(),
            DeltaSpec::Law(_) => Vec::new(),
        }
    }

    /// Semantic checks; `Err((key, message))` names the offending key.
    pub fn check(&self) -> Result<(), (&'static str, String)> {
        if self.channels < 1 {
            return Err(("channels", "channels must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(("K", "K must be >= 1".into()));
        }
        if self.k < 2 && self.kind == ExperimentKind::DofSweep {
            return Err(("K", "DofSweep needs K >= 2".into()));
        }
        if self.nt < self.k {
            return Err(("Nt", format!("Nt = {} is smaller than K = {}", self.nt, self.k)));
        }
        if !(self.sigma2 > 0.0) {
            return Err(("sigma2", "sigma2 must be positive".into()));
        }
        if self.oracle_samples < 1 {
            return Err(("oracle_samples", "oracle_samples must be >= 1".into()));
        }
        if !(self.ao.tol_rel > 0.0) || self.ao.max_iter < 1 {
            return Err(("ao", "ao needs tol_rel > 0 and max_iter >= 1".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(("snr_db", "snr_db entries must be finite".into()));
        }
        match &self.delta {
            DeltaSpec::Fixed(d) if !(*d >= 0.0) => return Err(("delta", "delta must be nonnegative".into())),
            DeltaSpec::Grid(g) if g.is_empty() || g.iter().any(|d| !(*d >= 0.0)) => {
                return Err(("delta", "delta grid must be nonempty and nonnegative".into()))
            }
            DeltaSpec::Law(l) => {
                RadiusLaw::new(l.delta0, l.alpha, l.scale).map_err(|e| ("delta", e.to_string()))?;
            }
            _ => {}
        }
        match self.kind {
            ExperimentKind::MaxMinSweep | ExperimentKind::DofSweep => {
                if self.snr_db.is_empty() {
                    return Err(("snr_db", "snr_db must be nonempty".into()));
                }
                if matches!(self.delta, DeltaSpec::Grid(_)) {
                    return Err(("delta", "a delta grid is only allowed for PowerFeasibility".into()));
                }
                if self.target_rate.is_some() {
                    return Err(("target_rate", "target_rate is only used by PowerFeasibility".into()));
                }
            }
            ExperimentKind::PowerFeasibility => {
                match self.target_rate {
                    None => return Err(("target_rate", "PowerFeasibility needs target_rate".into())),
                    Some(t) if !(t >= 0.0) || !t.is_finite() => {
                        return Err(("target_rate", "target_rate must be finite and nonnegative".into()))
                    }
                    _ => {}
                }
                if matches!(self.delta, DeltaSpec::Law(_)) {
                    return Err(("delta", "PowerFeasibility takes a radius or a list of radii".into()));
                }
            }
        }
        if self.kind == ExperimentKind::DofSweep {
            if !matches!(self.delta, DeltaSpec::Law(_)) {
                return Err(("delta", "DofSweep needs a radius law".into()));
            }
            if !(3..=6).contains(&self.dof_fit_points) {
                return Err(("dof_fit_points", "dof_fit_points must be between 3 and 6".into()));
            }
            if self.snr_db.len() < self.dof_fit_points {
                return Err(("snr_db", format!("DofSweep needs at least {} SNR points", self.dof_fit_points)));
            }
            if self.snr_db.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(("snr_db", "DofSweep SNR points must increase".into()));
            }
            if self.pt(self.snr_db[0]) < 1.0 {
                return Err(("snr_db", "DofSweep needs Pt >= 1 at every point".into()));
            }
        }
        Ok(())
    }
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, HarnessError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config {
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    cfg.check().map_err(|(key, message)| HarnessError::Config {
        line: key_line(text, key),
        message,
    })?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config {
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
  "kind": "MaxMinSweep",
  "K": 2,
  "Nt": 2,
  "snr_db": [10],
  "delta": 0.1,
  "channels": 1,
  "seed": 7
}"#;

    #[test]
    fn defaults_are_applied() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.sigma2, 1.0);
        assert_eq!(c.oracle_samples, 2000);
        assert_eq!(c.dof_fit_points, 4);
        assert_eq!(c.ao, AoSettings::default());
        assert_eq!(c.experiment_id(), "maxmin");
    }

    #[test]
    fn missing_key_is_named() {
        let text = MINIMAL.replace("  \"channels\": 1,\n", "");
        let err = parse_config_str(&text).unwrap_err();
        assert!(err.to_string().contains("channels"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_is_rejected_with_its_line() {
        let text = MINIMAL.replace("\"seed\": 7", "\"seed\": 7,\n  \"sede\": 8");
        match parse_config_str(&text).unwrap_err() {
            HarnessError::Config { line, message } => {
                assert_eq!(line, Some(9));
                assert!(message.contains("sede"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let text = MINIMAL.replace("\"channels\": 1", "\"channels\": 0");
        match parse_config_str(&text).unwrap_err() {
            HarnessError::Config { line, .. } => assert_eq!(line, Some(7)),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn delta_forms() {
        let law = MINIMAL.replace("\"delta\": 0.1", r#""delta": {"delta0": 0.1, "alpha": 0.5, "scale": 10}"#);
        let c = parse_config_str(&law).unwrap();
        assert!((c.delta_at(20.0) - 0.1).abs() < 1e-15);
        let grid = MINIMAL
            .replace("\"delta\": 0.1", "\"delta\": [0.05, 0.1]")
            .replace("MaxMinSweep", "PowerFeasibility")
            .replace("\"seed\": 7", "\"seed\": 7, \"target_rate\": 1.5");
        let c = parse_config_str(&grid).unwrap();
        assert_eq!(c.delta_grid(), vec![0.05, 0.1]);
        let missing_target = MINIMAL.replace("MaxMinSweep", "PowerFeasibility");
        assert!(parse_config_str(&missing_target).is_err());
    }
}
