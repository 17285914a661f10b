//! Empirical loss distributions, VaR and CVaR.
//!
//! VaR at confidence `alpha` is the smallest sample `x` with
//! `P(loss <= x) >= alpha` (inverted CDF, no interpolation). CVaR is the mean
//! of the samples at or above VaR. All sums run over sorted values so results
//! do not depend on sample order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orientation of the quantile level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileConvention {
    /// Level `alpha`: VaR sits in the right tail of losses.
    #[default]
    UpperTail,
    /// Level `1 - alpha`, reading the defining inequality literally.
    Literal,
}

impl QuantileConvention {
    fn level(self, alpha: f64) -> f64 {
        match self {
            QuantileConvention::UpperTail => alpha,
            QuantileConvention::Literal => 1.0 - alpha,
        }
    }
}

fn sorted(samples: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "confidence level {alpha} outside (0, 1)"
        )));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::invalid("loss sample contains NaN"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn quantile_sorted(v: &[f64], level: f64) -> f64 {
    let n = v.len() as f64;
    // smallest k with k / n >= level; the slack absorbs rounding in level * n
    let k = ((level * n) - 1e-9).ceil().max(1.0) as usize;
    v[k.min(v.len()) - 1]
}

fn tail_mean_sorted(v: &[f64], var: f64) -> f64 {
    let start = v.partition_point(|&x| x < var);
    let tail = &v[start..];
    if tail.is_empty() {
        return var;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

pub fn empirical_var(samples: &[f64], alpha: f64) -> Result<f64> {
    empirical_var_with(samples, alpha, QuantileConvention::UpperTail)
}

pub fn empirical_var_with(
    samples: &[f64],
    alpha: f64,
    convention: QuantileConvention,
) -> Result<f64> {
    let v = sorted(samples, alpha)?;
    Ok(quantile_sorted(&v, convention.level(alpha)))
}

pub fn empirical_cvar(samples: &[f64], alpha: f64) -> Result<f64> {
    empirical_cvar_with(samples, alpha, QuantileConvention::UpperTail)
}

pub fn empirical_cvar_with(
    samples: &[f64],
    alpha: f64,
    convention: QuantileConvention,
) -> Result<f64> {
    let v = sorted(samples, alpha)?;
    let var = quantile_sorted(&v, convention.level(alpha));
    Ok(tail_mean_sorted(&v, var))
}

/// Median with the midpoint rule for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// Losses of one (network, scenario) run. `h[t]` and `global[t]` hold round
/// `t + 1`: first round, end of the interbank rounds, and the fire-sale round
/// when it was simulated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSample {
    pub network: usize,
    pub scenario: usize,
    pub shock: f64,
    pub h: Vec<Vec<f64>>,
    pub global: Vec<f64>,
}

impl LossSample {
    pub fn rounds(&self) -> usize {
        self.global.len()
    }

    pub fn banks(&self) -> usize {
        self.h.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRisk {
    pub round: usize,
    pub var: f64,
    pub cvar: f64,
    /// Median of `H` over all pooled samples.
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankRisk {
    pub bank: usize,
    pub round: usize,
    pub var: f64,
    pub cvar: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMedians {
    pub scenario: usize,
    pub shock: f64,
    /// Per round, median over networks of `H`.
    pub global: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub alpha: f64,
    pub convention: QuantileConvention,
    pub samples: usize,
    pub networks: usize,
    pub scenarios: usize,
    pub rounds: usize,
    /// VaR and CVaR of the pooled global loss sample, per round.
    pub global: Vec<RoundRisk>,
    /// Per bank and round, over the pooled sample.
    pub per_bank: Vec<BankRisk>,
    pub scenario_medians: Vec<ScenarioMedians>,
}

impl RiskReport {
    pub fn global_round(&self, round: usize) -> Option<&RoundRisk> {
        self.global.iter().find(|r| r.round == round)
    }
}

/// Pools every loss sample per round for VaR/CVaR and takes medians over
/// networks for point statistics.
pub fn aggregate_ensemble(
    losses: &[LossSample],
    alpha: f64,
    convention: QuantileConvention,
) -> Result<RiskReport> {
    if losses.is_empty() {
        return Err(Error::EmptySample);
    }
    let rounds = losses.iter().map(LossSample::rounds).min().unwrap_or(0);
    let banks = losses.iter().map(LossSample::banks).min().unwrap_or(0);

    let mut global = Vec::with_capacity(rounds);
    let mut per_bank = Vec::with_capacity(rounds * banks);
    for t in 0..rounds {
        let pooled: Vec<f64> = losses.iter().map(|s| s.global[t]).collect();
        global.push(RoundRisk {
            round: t + 1,
            var: empirical_var_with(&pooled, alpha, convention)?,
            cvar: empirical_cvar_with(&pooled, alpha, convention)?,
            median: median(&pooled).expect("non-empty"),
        });
    }
    for bank in 0..banks {
        for t in 0..rounds {
            let pooled: Vec<f64> = losses.iter().map(|s| s.h[t][bank]).collect();
            per_bank.push(BankRisk {
                bank,
                round: t + 1,
                var: empirical_var_with(&pooled, alpha, convention)?,
                cvar: empirical_cvar_with(&pooled, alpha, convention)?,
                median: median(&pooled).expect("non-empty"),
            });
        }
    }

    let mut by_scenario: BTreeMap<usize, Vec<&LossSample>> = BTreeMap::new();
    for s in losses {
        by_scenario.entry(s.scenario).or_default().push(s);
    }
    let scenario_medians = by_scenario
        .iter()
        .map(|(&scenario, group)| ScenarioMedians {
            scenario,
            shock: group[0].shock,
            global: (0..rounds)
                .map(|t| {
                    median(&group.iter().map(|s| s.global[t]).collect::<Vec<_>>())
                        .expect("non-empty")
                })
                .collect(),
        })
        .collect();

    let mut networks: Vec<usize> = losses.iter().map(|s| s.network).collect();
    networks.sort_unstable();
    networks.dedup();

    Ok(RiskReport {
        alpha,
        convention,
        samples: losses.len(),
        networks: networks.len(),
        scenarios: by_scenario.len(),
        rounds,
        global,
        per_bank,
        scenario_medians,
    })
}
