//! Run configuration: command-line flags layered over an optional JSON file.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use debtstress::contagion::DistressFunction;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const DEFAULT_DENSITY: f64 = 0.05;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_ETA: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 0.95;
pub const DEFAULT_QUADRANT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    Debtrank,
    Cascade,
}

impl Dynamics {
    pub fn distress(self) -> DistressFunction {
        match self {
            Dynamics::Debtrank => DistressFunction::Identity,
            Dynamics::Cascade => DistressFunction::DefaultIndicator,
        }
    }

    pub fn from_distress(f: DistressFunction) -> Self {
        match f {
            DistressFunction::Identity => Dynamics::Debtrank,
            DistressFunction::DefaultIndicator => Dynamics::Cascade,
        }
    }
}

/// Values accepted in `--config`. Any field may be omitted; explicit flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub period: Option<i32>,
    pub density: Option<f64>,
    pub samples: Option<usize>,
    pub ipf_tolerance: Option<f64>,
    pub shock: Option<String>,
    pub scenario: Option<PathBuf>,
    pub dynamics: Option<Dynamics>,
    pub eta: Option<f64>,
    pub impact: Option<bool>,
    pub alpha: Option<f64>,
    pub quadrant_vulnerability: Option<f64>,
    pub quadrant_impact: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = crate::read_input(path)?;
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}

pub fn check_unit_open(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Failure::usage(format!("{name} = {v} must lie in (0, 1)")))
    }
}

pub fn check_unit_closed(name: &str, v: f64) -> Result<f64, Failure> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Failure::usage(format!("{name} = {v} must lie in [0, 1]")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let c: RunConfig =
            serde_json::from_str(r#"{"seed":4,"dynamics":"cascade","eta":0.1}"#).unwrap();
        assert_eq!(c.seed, Some(4));
        assert_eq!(c.dynamics, Some(Dynamics::Cascade));
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead":4}"#).is_err());
    }

    #[test]
    fn ranges() {
        assert!(check_unit_open("alpha", 1.0).is_err());
        assert!(check_unit_open("alpha", 0.95).is_ok());
        assert!(check_unit_closed("eta", 0.0).is_ok());
    }
}
