//! Shock scenarios for Monte Carlo stress tests.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::contagion::{DistressFunction, ShockVector};
use crate::error::{Error, Result};
use crate::seed;

/// Total draw budget for raw rejection sampling.
pub const MAX_REJECTION_ATTEMPTS: u64 = 200_000_000;

/// How a Beta draw is confined to `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationSampler {
    /// `min + x (max - min)` for `x ~ Beta(a, b)`.
    #[default]
    Rescale,
    /// Redraw until `x ~ Beta(a, b)` falls inside `[min, max]`.
    Reject,
}

impl fmt::Display for TruncationSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TruncationSampler::Rescale => "rescale",
            TruncationSampler::Reject => "reject",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShockKind {
    Fixed {
        r: f64,
    },
    Beta {
        a: f64,
        b: f64,
        min: f64,
        max: f64,
        draws: usize,
        #[serde(default)]
        sampler: TruncationSampler,
    },
    PerAsset {
        shocks: BTreeMap<String, f64>,
    },
}

impl ShockKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            ShockKind::Fixed { r } => {
                if !(0.0..=1.0).contains(r) {
                    return Err(Error::invalid(format!("fixed shock {r} outside [0, 1]")));
                }
            }
            ShockKind::Beta {
                a,
                b,
                min,
                max,
                draws,
                ..
            } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(Error::invalid("Beta parameters must be positive"));
                }
                if !(0.0 <= *min && min < max && *max <= 1.0) {
                    return Err(Error::invalid(format!(
                        "truncation bounds [{min}, {max}] invalid"
                    )));
                }
                if *draws == 0 {
                    return Err(Error::invalid("draw count must be positive"));
                }
            }
            ShockKind::PerAsset { shocks } => {
                if let Some((k, v)) = shocks.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
                    return Err(Error::invalid(format!("shock {v} on `{k}` outside [0, 1]")));
                }
            }
        }
        Ok(())
    }
}

/// Parses `fixed:R` and `beta:A,B,MIN,MAX,DRAWS[,rescale|reject]`.
impl FromStr for ShockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("shock `{s}` must look like kind:params")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("`{v}` is not a number in shock `{s}`")))
        };
        let parsed = match kind {
            "fixed" => ShockKind::Fixed { r: num(rest)? },
            "beta" => {
                let parts: Vec<&str> = rest.split(',').collect();
                if !(5..=6).contains(&parts.len()) {
                    return Err(Error::invalid(format!(
                        "beta shock needs a,b,min,max,draws[,sampler], got `{rest}`"
                    )));
                }
                let draws = parts[4].trim().parse::<usize>().map_err(|_| {
                    Error::invalid(format!("draw count `{}` is not an integer", parts[4]))
                })?;
                let sampler = match parts.get(5).map(|p| p.trim()) {
                    None | Some("rescale") => TruncationSampler::Rescale,
                    Some("reject") => TruncationSampler::Reject,
                    Some(other) => {
                        return Err(Error::invalid(format!("unknown sampler `{other}`")))
                    }
                };
                ShockKind::Beta {
                    a: num(parts[0])?,
                    b: num(parts[1])?,
                    min: num(parts[2])?,
                    max: num(parts[3])?,
                    draws,
                    sampler,
                }
            }
            other => return Err(Error::invalid(format!("unknown shock kind `{other}`"))),
        };
        parsed.validate()?;
        Ok(parsed)
    }
}

fn default_dynamics() -> DistressFunction {
    DistressFunction::Identity
}

/// A complete scenario configuration, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(flatten)]
    pub kind: ShockKind,
    #[serde(default = "default_dynamics")]
    pub dynamics: DistressFunction,
    /// Price impact for the fire-sale round; no third round when absent.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ShockKind, seed: u64) -> Self {
        ScenarioSpec {
            kind,
            dynamics: DistressFunction::Identity,
            eta: None,
            seed,
        }
    }
}

/// Draws the scenario's shock vectors. `asset_classes` fixes the order of
/// per-asset shocks; classes absent from the scenario get zero.
pub fn draw_shocks(spec: &ScenarioSpec, asset_classes: &[String]) -> Result<Vec<ShockVector>> {
    spec.kind.validate()?;
    match &spec.kind {
        ShockKind::Fixed { r } => Ok(vec![ShockVector::common(*r)?]),
        ShockKind::Beta {
            a,
            b,
            min,
            max,
            draws,
            sampler,
        } => {
            let values = draw_truncated_beta(*a, *b, *min, *max, *draws, *sampler, spec.seed)?;
            values.into_iter().map(ShockVector::common).collect()
        }
        ShockKind::PerAsset { shocks } => {
            if let Some(unknown) = shocks.keys().find(|k| !asset_classes.contains(k)) {
                return Err(Error::UnknownAssetClass(unknown.clone()));
            }
            if asset_classes.is_empty() {
                return Err(Error::invalid(
                    "per-asset shocks need an external-asset breakdown",
                ));
            }
            let v = asset_classes
                .iter()
                .map(|c| shocks.get(c).copied().unwrap_or(0.0))
                .collect();
            Ok(vec![ShockVector::per_asset(v)?])
        }
    }
}

pub fn draw_truncated_beta(
    a: f64,
    b: f64,
    min: f64,
    max: f64,
    draws: usize,
    sampler: TruncationSampler,
    seed: u64,
) -> Result<Vec<f64>> {
    let beta = Beta::new(a, b).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = seed::rng(seed);
    let mut out = Vec::with_capacity(draws);
    match sampler {
        TruncationSampler::Rescale => {
            for _ in 0..draws {
                let x: f64 = beta.sample(&mut rng);
                out.push((min + x * (max - min)).clamp(min, max));
            }
        }
        TruncationSampler::Reject => {
            let mut attempts = 0u64;
            while out.len() < draws {
                if attempts == MAX_REJECTION_ATTEMPTS {
                    return Err(Error::invalid(format!(
                        "rejection sampler accepted {} of {draws} draws in {attempts} attempts",
                        out.len()
                    )));
                }
                attempts += 1;
                let x: f64 = beta.sample(&mut rng);
                if (min..=max).contains(&x) {
                    out.push(x);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_shock() {
        let spec = ScenarioSpec::new(ShockKind::Fixed { r: 0.01 }, 0);
        let v = draw_shocks(&spec, &[]).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].as_common(), Some(0.01));
    }

    #[test]
    fn beta_draws_within_bounds() {
        let kind: ShockKind = "beta:4,8,0.001,0.015,150".parse().unwrap();
        let spec = ScenarioSpec::new(kind, 7);
        let v = draw_shocks(&spec, &[]).unwrap();
        assert_eq!(v.len(), 150);
        for s in &v {
            let r = s.as_common().unwrap();
            assert!((0.001..=0.015).contains(&r));
        }
        assert_eq!(v, draw_shocks(&spec, &[]).unwrap());
    }

    #[test]
    fn rejection_sampler() {
        let v = draw_truncated_beta(4.0, 8.0, 0.2, 0.5, 500, TruncationSampler::Reject, 3).unwrap();
        assert!(v.iter().all(|x| (0.2..=0.5).contains(x)));
    }

    #[test]
    fn json_config() {
        let spec: ScenarioSpec = serde_json::from_str(
            r#"{"kind":"beta","a":4,"b":8,"min":0.001,"max":0.015,"draws":150,"seed":7}"#,
        )
        .unwrap();
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.dynamics, DistressFunction::Identity);
        assert!(matches!(
            spec.kind,
            ShockKind::Beta {
                draws: 150,
                sampler: TruncationSampler::Rescale,
                ..
            }
        ));
        let fixed: ScenarioSpec = serde_json::from_str(
            r#"{"kind":"fixed","r":0.01,"dynamics":"default_indicator","eta":0.1}"#,
        )
        .unwrap();
        assert_eq!(fixed.eta, Some(0.1));
        assert_eq!(fixed.dynamics, DistressFunction::DefaultIndicator);
    }

    #[test]
    fn per_asset_alignment() {
        let classes = vec!["gov".to_string(), "corp".to_string(), "re".to_string()];
        let shocks = BTreeMap::from([("re".to_string(), 0.2), ("gov".to_string(), 0.05)]);
        let spec = ScenarioSpec::new(ShockKind::PerAsset { shocks }, 0);
        let v = draw_shocks(&spec, &classes).unwrap();
        assert_eq!(v[0].values(), &[0.05, 0.0, 0.2]);

        let shocks = BTreeMap::from([("fx".to_string(), 0.2)]);
        let spec = ScenarioSpec::new(ShockKind::PerAsset { shocks }, 0);
        assert!(
            matches!(draw_shocks(&spec, &classes), Err(Error::UnknownAssetClass(c)) if c == "fx")
        );
    }

    #[test]
    fn bad_strings() {
        assert!("fixed:1.5".parse::<ShockKind>().is_err());
        assert!("beta:4,8,0.02,0.01,10".parse::<ShockKind>().is_err());
        assert!("gamma:1".parse::<ShockKind>().is_err());
        assert!("beta:4,8,0.001,0.015,10,clip".parse::<ShockKind>().is_err());
    }

    #[test]
    fn untruncated_beta_mean() {
        // rescaling onto [0, 1] leaves the Beta draw untouched
        let n = 100_000;
        let v = draw_truncated_beta(4.0, 8.0, 0.0, 1.0, n, TruncationSampler::Rescale, 11).unwrap();
        let mean = v.iter().sum::<f64>() / n as f64;
        let (a, b) = (4.0, 8.0);
        let var = a * b / ((a + b) * (a + b) * (a + b + 1.0));
        let se = (var / n as f64).sqrt();
        assert!((mean - a / (a + b)).abs() < 3.0 * se, "mean {mean}");
    }
}
