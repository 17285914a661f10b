//! Third round: banks sell external assets to return to their initial
//! leverage, and the aggregate sale depresses the common asset price.
//!
//! After round two the leverage of a surviving bank is
//!
//! ```text
//! l_i(T) = [(1-r) l^e_i + l^b_i - (h_i(2) - h_i(1))] / (1 - h_i(2))
//! ```
//!
//! Selling the fraction `s_i = h_i(2) / ((1-r) l^e_i) * (l_i - 1) / (l_i + 1)`
//! of external assets restores `l_i(0)`. The sold share `rho` lowers the price
//! to `(1-r)(1 - rho eta)` and every surviving holder books the loss.

use serde::{Deserialize, Serialize};

use crate::contagion::{weighted_loss, ContagionState};
use crate::error::{Error, Result};
use crate::model::LeverageNetworks;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FireSalesParams {
    /// Linear price impact per unit of relative quantity sold.
    pub eta: f64,
    /// Common first-round shock on external assets.
    pub r: f64,
}

impl FireSalesParams {
    pub fn new(eta: f64, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(format!(
                "price impact eta = {eta} outside [0, 1]"
            )));
        }
        if !(0.0..1.0).contains(&r) {
            return Err(Error::invalid(format!("shock r = {r} outside [0, 1)")));
        }
        Ok(FireSalesParams { eta, r })
    }
}

/// Why a bank does not take part in the asset sale, or sells less than its
/// leverage target requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaleFlag {
    Defaulted,
    NoExternalAssets,
    /// `l_i <= 1` with positive distress: the target needs no sale.
    NotLevered,
    /// The target would need more than all external assets; sale capped at 1.
    Capped,
}

/// `l_i(T)` for each bank; `None` for defaulted banks.
pub fn post_round2_leverage(
    leverage: &LeverageNetworks,
    h1: &[f64],
    h2: &[f64],
    r: f64,
) -> Vec<Option<f64>> {
    let le = leverage.total_external();
    let lb = leverage.total_interbank();
    (0..leverage.len())
        .map(|i| {
            (h2[i] < 1.0).then(|| ((1.0 - r) * le[i] + lb[i] - (h2[i] - h1[i])) / (1.0 - h2[i]))
        })
        .collect()
}

/// Leverage after selling `s` of external assets at price `1 - r`.
pub fn leverage_after_sale(le: f64, lb: f64, h1: f64, h2: f64, r: f64, s: f64) -> f64 {
    ((1.0 - s) * (1.0 - r) * le + lb - (h2 - h1)) / ((1.0 - h2) + s * (1.0 - r) * le)
}

/// Closed-form sale fraction for one bank, before any capping.
pub fn raw_sale_fraction(le: f64, lb: f64, h2: f64, r: f64) -> f64 {
    let l = le + lb;
    h2 / ((1.0 - r) * le) * (l - 1.0) / (l + 1.0)
}

/// Sale fraction per bank with the reason for any departure from the
/// closed form.
pub fn sale_fraction(
    leverage: &LeverageNetworks,
    h2: &[f64],
    r: f64,
) -> (Vec<f64>, Vec<Option<SaleFlag>>) {
    let le = leverage.total_external();
    let lb = leverage.total_interbank();
    let mut s = vec![0.0; leverage.len()];
    let mut flags = vec![None; leverage.len()];
    for i in 0..leverage.len() {
        if h2[i] >= 1.0 {
            flags[i] = Some(SaleFlag::Defaulted);
        } else if !(le[i] > 0.0) {
            flags[i] = Some(SaleFlag::NoExternalAssets);
        } else if h2[i] > 0.0 {
            if le[i] + lb[i] <= 1.0 {
                flags[i] = Some(SaleFlag::NotLevered);
            } else {
                let v = raw_sale_fraction(le[i], lb[i], h2[i], r);
                if v > 1.0 {
                    flags[i] = Some(SaleFlag::Capped);
                    s[i] = 1.0;
                } else {
                    s[i] = v;
                }
            }
        }
    }
    (s, flags)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireSalesOutcome {
    pub post_round2_leverage: Vec<Option<f64>>,
    pub sale_fractions: Vec<f64>,
    pub flags: Vec<Option<SaleFlag>>,
    /// `rho = sum s_i Q_i / sum Q_i` over participating banks.
    pub sold_fraction: f64,
    /// `p(T+2) = (1-r)(1 - rho eta)`.
    pub final_price: f64,
    pub h_final: Vec<f64>,
    pub global_final: f64,
    pub decomposition: RoundDecomposition,
}

/// Contribution of each round to the final global loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundDecomposition {
    pub first: f64,
    pub second: f64,
    pub third: f64,
}

impl RoundDecomposition {
    pub fn total(&self) -> f64 {
        self.first + self.second + self.third
    }
}

/// Runs the fire-sale round on a completed second-round state. `quantities`
/// are the initial external holdings at unit price.
pub fn third_round(
    leverage: &LeverageNetworks,
    state: &ContagionState,
    params: FireSalesParams,
    quantities: &[f64],
) -> Result<FireSalesOutcome> {
    let n = leverage.len();
    if quantities.len() != n || state.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: quantities.len().min(state.len()),
        });
    }
    let FireSalesParams { eta, r } = params;
    let h1 = state.first();
    let h2 = state.last();
    let lt = post_round2_leverage(leverage, h1, h2, r);
    let (s, flags) = sale_fraction(leverage, h2, r);

    let mut sold = 0.0;
    let mut held = 0.0;
    for i in 0..n {
        if !matches!(flags[i], Some(SaleFlag::Defaulted)) {
            sold += s[i] * quantities[i];
            held += quantities[i];
        }
    }
    let rho = if held > 0.0 { sold / held } else { 0.0 };
    let final_price = (1.0 - r) * (1.0 - rho * eta);

    let le = leverage.total_external();
    let h_final: Vec<f64> = (0..n)
        .map(|i| {
            if h2[i] >= 1.0 {
                1.0
            } else {
                (h2[i] + le[i] * (1.0 - r) * (1.0 - s[i]) * rho * eta).min(1.0)
            }
        })
        .collect();

    let w = &state.weights;
    let first = weighted_loss(w, h1);
    let second_total = weighted_loss(w, h2);
    let global_final = weighted_loss(w, &h_final);
    Ok(FireSalesOutcome {
        post_round2_leverage: lt,
        sale_fractions: s,
        flags,
        sold_fraction: rho,
        final_price,
        h_final,
        global_final,
        decomposition: RoundDecomposition {
            first,
            second: second_total - first,
            third: global_final - second_total,
        },
    })
}
