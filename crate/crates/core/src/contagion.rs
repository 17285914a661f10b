//! First- and second-round distress dynamics.
//!
//! Round one applies a shock to external assets, `h_i(1) = min(1, sum_k l^e_ik r_k)`.
//! From round two on, distress travels along interbank leverage:
//!
//! ```text
//! h_i(t) = min(1, h_i(t-1) + sum_{j in S_A(t)} l^b_ij f(h_j(t-1)))
//! ```
//!
//! where the active set `S_A(t)` holds banks that have not yet transmitted and
//! whose `f(h_j)` is positive. Each bank transmits exactly once, then joins
//! the propagated set, so the process stops after at most `n + 1` rounds.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LeverageNetworks;

/// Loss on an obligation as a function of the obligor's distress.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistressFunction {
    /// `f(h) = h`: DebtRank.
    Identity,
    /// `f(h) = 1{h = 1}`: default cascade.
    DefaultIndicator,
}

impl DistressFunction {
    #[inline]
    pub fn apply(self, h: f64) -> f64 {
        match self {
            DistressFunction::Identity => h,
            DistressFunction::DefaultIndicator => {
                if h >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Relative shocks on external assets, one per asset class, or a single
/// common shock broadcast to every class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockVector(Vec<f64>);

impl ShockVector {
    pub fn common(r: f64) -> Result<Self> {
        Self::per_asset(vec![r])
    }

    pub fn per_asset(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("shock vector is empty"));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("shock {bad} outside [0, 1]")));
        }
        Ok(ShockVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn as_common(&self) -> Option<f64> {
        match self.0[..] {
            [r] => Some(r),
            _ => None,
        }
    }

    /// Shock on class `k`, broadcasting a common value.
    pub fn get(&self, k: usize) -> f64 {
        if self.0.len() == 1 {
            self.0[0]
        } else {
            self.0[k]
        }
    }

    /// Holdings-weighted mean shock over all external assets in the system.
    /// Used where a single common price path is required.
    pub fn effective_common(&self, leverage: &LeverageNetworks) -> f64 {
        if let Some(r) = self.as_common() {
            return r;
        }
        let mut lost = 0.0;
        let mut held = 0.0;
        for i in 0..leverage.len() {
            let e = leverage.equities()[i];
            for (k, l) in leverage.external_row(i).iter().enumerate() {
                lost += l * e * self.get(k);
                held += l * e;
            }
        }
        if held > 0.0 {
            lost / held
        } else {
            0.0
        }
    }
}

/// Per-bank distress trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContagionState {
    /// `h(t)` for the current round.
    pub h: Vec<f64>,
    /// Snapshots `h(1), h(2), ...`; index `t - 1` holds round `t`.
    pub history: Vec<Vec<f64>>,
    pub active: Vec<bool>,
    pub propagated: Vec<bool>,
    pub weights: Vec<f64>,
    /// Current round.
    pub round: usize,
    /// Round at which propagation stopped, once it has.
    pub terminated_at: Option<usize>,
    /// Order in which banks transmitted, with the round of transmission.
    pub transmissions: Vec<(usize, usize)>,
}

impl ContagionState {
    fn at_round_one(h: Vec<f64>, weights: Vec<f64>) -> Self {
        let n = h.len();
        ContagionState {
            active: h.iter().map(|&v| v > 0.0).collect(),
            propagated: vec![false; n],
            history: vec![h.clone()],
            h,
            weights,
            round: 1,
            terminated_at: None,
            transmissions: Vec::new(),
        }
    }

    pub fn first(&self) -> &[f64] {
        &self.history[0]
    }

    /// Distress at the last computed round (`h(T)` after propagation).
    pub fn last(&self) -> &[f64] {
        self.history.last().expect("history starts at round one")
    }

    pub fn at(&self, round: usize) -> Option<&[f64]> {
        round
            .checked_sub(1)
            .and_then(|t| self.history.get(t))
            .map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn active_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.active[i]).collect()
    }

    pub fn propagated_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.propagated[i]).collect()
    }
}

/// `h_i(1) = min(1, sum_k l^e_ik r_k)`. Every bank with positive distress
/// starts in the active set.
pub fn first_round(leverage: &LeverageNetworks, shock: &ShockVector) -> Result<ContagionState> {
    let m = leverage.asset_classes();
    if shock.values().len() != 1 && shock.values().len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: shock.values().len(),
        });
    }
    let h = (0..leverage.len())
        .map(|i| {
            let loss: f64 = leverage
                .external_row(i)
                .iter()
                .enumerate()
                .map(|(k, l)| l * shock.get(k))
                .sum();
            loss.min(1.0)
        })
        .collect();
    Ok(ContagionState::at_round_one(h, leverage.equity_weights()))
}

/// State in which only `seed` is in default, used for impact runs.
pub fn seed_default(leverage: &LeverageNetworks, seed: usize) -> ContagionState {
    let mut h = vec![0.0; leverage.len()];
    h[seed] = 1.0;
    ContagionState::at_round_one(h, leverage.equity_weights())
}

/// Runs the interbank rounds until no bank is left to transmit.
pub fn propagate(
    mut state: ContagionState,
    leverage: &LeverageNetworks,
    f: DistressFunction,
) -> ContagionState {
    let n = state.len();
    debug_assert_eq!(n, leverage.len());
    if state.terminated_at.is_some() {
        return state;
    }
    loop {
        let transmitting: Vec<usize> = (0..n)
            .filter(|&j| !state.propagated[j] && f.apply(state.h[j]) > 0.0)
            .collect();
        if transmitting.is_empty() {
            state.active.iter_mut().for_each(|a| *a = false);
            state.terminated_at = Some(state.round);
            return state;
        }
        let prev = state.h.clone();
        let mut next = prev.clone();
        for (i, slot) in next.iter_mut().enumerate() {
            let row = leverage.interbank_row(i);
            let inflow: f64 = transmitting
                .iter()
                .map(|&j| row[j] * f.apply(prev[j]))
                .sum();
            if inflow > 0.0 {
                *slot = (*slot + inflow).min(1.0);
            }
        }
        state.round += 1;
        for &j in &transmitting {
            state.propagated[j] = true;
            state.transmissions.push((j, state.round));
        }
        // Banks hit this round that have not transmitted yet are next in line.
        for i in 0..n {
            state.active[i] = !state.propagated[i] && next[i] > prev[i];
        }
        state.h = next;
        state.history.push(state.h.clone());
    }
}

/// `h_i(2) = min(1, l^e_i r + sum_j l^b_ij l^e_j r)` for a common shock.
pub fn closed_form_second_round(leverage: &LeverageNetworks, r: f64) -> Vec<f64> {
    let ext = leverage.total_external();
    (0..leverage.len())
        .map(|i| {
            let network: f64 = leverage
                .interbank_row(i)
                .iter()
                .zip(ext)
                .map(|(lb, le)| lb * le * r)
                .sum();
            (ext[i] * r + network).min(1.0)
        })
        .collect()
}

/// `H = sum_i w_i h_i`.
pub fn weighted_loss(weights: &[f64], h: &[f64]) -> f64 {
    weights.iter().zip(h).map(|(w, v)| w * v).sum()
}

/// Which snapshot of a trajectory to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundSelector {
    First,
    Final,
    At(usize),
}

/// Global vulnerability `H` at a round; `None` if the round was never reached.
pub fn global_vulnerability(state: &ContagionState, round: RoundSelector) -> Option<f64> {
    let h = match round {
        RoundSelector::First => state.first(),
        RoundSelector::Final => state.last(),
        RoundSelector::At(t) => state.at(t)?,
    };
    Some(weighted_loss(&state.weights, h))
}

/// Equity lost system-wide in currency units.
pub fn monetary_loss(
    state: &ContagionState,
    round: RoundSelector,
    equities: &[f64],
) -> Option<f64> {
    let total: f64 = equities.iter().sum();
    global_vulnerability(state, round).map(|h| h * total)
}

/// Weighted-average approximation of `H(2)` with the gap to the exact value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondRoundApproximation {
    pub mean_external_leverage: f64,
    pub mean_interbank_leverage: f64,
    pub approximate: f64,
    pub exact: f64,
    pub gap: f64,
}

/// `l̄e r + l̄b l̄e r`, with equity-weighted averages of leverage.
pub fn approx_global_second_round(leverage: &LeverageNetworks, r: f64) -> SecondRoundApproximation {
    let w = leverage.equity_weights();
    let le = weighted_loss(&w, leverage.total_external());
    let lb = weighted_loss(&w, leverage.total_interbank());
    let approximate = le * r + lb * le * r;
    let exact = weighted_loss(&w, &closed_form_second_round(leverage, r));
    SecondRoundApproximation {
        mean_external_leverage: le,
        mean_interbank_leverage: lb,
        approximate,
        exact,
        gap: approximate - exact,
    }
}

/// System-wide loss induced by the default of one bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Impact {
    /// `sum_i w_i h_i(T)`, including the seed's own loss.
    pub relative: f64,
    /// Same, excluding the seed bank's weight.
    pub net: f64,
    /// `sum_i h_i(T) E_i(0)`.
    pub monetary: f64,
}

pub fn impact(bank: usize, leverage: &LeverageNetworks, f: DistressFunction) -> Impact {
    let state = propagate(seed_default(leverage, bank), leverage, f);
    let relative = weighted_loss(&state.weights, state.last());
    let monetary = state
        .last()
        .iter()
        .zip(leverage.equities())
        .map(|(h, e)| h * e)
        .sum();
    Impact {
        relative,
        net: relative - state.weights[bank] * state.last()[bank],
        monetary,
    }
}

/// Impact of every bank, in cohort order.
pub fn impact_vector(leverage: &LeverageNetworks, f: DistressFunction) -> Vec<Impact> {
    (0..leverage.len())
        .map(|k| impact(k, leverage, f))
        .collect()
}

/// Writes `bank_id,round,h` for every round of a trajectory.
pub fn write_trajectory<W: Write>(
    out: &mut W,
    ids: &[&str],
    state: &ContagionState,
) -> std::io::Result<()> {
    writeln!(out, "bank_id,round,h")?;
    for (t, h) in state.history.iter().enumerate() {
        for (id, v) in ids.iter().zip(h) {
            writeln!(out, "{id},{},{v}", t + 1)?;
        }
    }
    Ok(())
}

/// Writes `bank_id,dr`.
pub fn write_impacts<W: Write>(
    out: &mut W,
    ids: &[&str],
    impacts: &[Impact],
) -> std::io::Result<()> {
    writeln!(out, "bank_id,dr")?;
    for (id, dr) in ids.iter().zip(impacts) {
        writeln!(out, "{id},{}", dr.relative)?;
    }
    Ok(())
}
