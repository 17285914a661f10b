//! Synthetic cohorts for experiments without proprietary balance-sheet data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BankRecord, Cohort, LeverageNetworks};

/// Standard-normal draws are clamped to this many deviations so that the
/// feasibility check on the parameters covers every possible draw.
const Z_CLAMP: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub period: i32,
    /// Log of the median total assets.
    pub log_size_mean: f64,
    /// Dispersion of log total assets. Values much above 0.5 make the
    /// smallest banks too sparse to link at a 5% network density.
    pub log_size_sd: f64,
    /// Range of total leverage `A_i / E_i`, drawn uniformly.
    pub leverage_min: f64,
    pub leverage_max: f64,
    /// Median share of total assets lent (and borrowed) on the interbank market.
    pub interbank_share_median: f64,
    /// Dispersion of the log interbank shares.
    pub interbank_share_sd: f64,
    /// Correlation between log lending and log borrowing shares.
    pub lending_borrowing_correlation: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            period: 2013,
            log_size_mean: 50_000f64.ln(),
            log_size_sd: 0.4,
            leverage_min: 8.0,
            leverage_max: 30.0,
            interbank_share_median: 0.12,
            interbank_share_sd: 0.2,
            lending_borrowing_correlation: 0.7,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        if !(self.log_size_sd >= 0.0) || !self.log_size_mean.is_finite() {
            return Err(Error::invalid(
                "size distribution must have finite mean and sd >= 0",
            ));
        }
        if !(self.leverage_min > 1.0 && self.leverage_max >= self.leverage_min) {
            return Err(Error::invalid(format!(
                "leverage range [{}, {}] must satisfy 1 < min <= max",
                self.leverage_min, self.leverage_max
            )));
        }
        if !(self.interbank_share_median > 0.0 && self.interbank_share_sd >= 0.0) {
            return Err(Error::invalid(
                "interbank share median must be positive and sd >= 0",
            ));
        }
        if !(-1.0..=1.0).contains(&self.lending_borrowing_correlation) {
            return Err(Error::invalid("correlation must lie in [-1, 1]"));
        }
        let max_share = self.interbank_share_median * (Z_CLAMP * self.interbank_share_sd).exp();
        if max_share > 1.0 {
            return Err(Error::invalid(format!(
                "interbank share can reach {max_share:.3} > 1 of total assets"
            )));
        }
        // D^e = A (1 - borrow_share - 1/leverage) must stay non-negative.
        if max_share + 1.0 / self.leverage_min > 1.0 {
            return Err(Error::invalid(format!(
                "parameters imply negative external liabilities: borrowing share up to {max_share:.3} \
                 plus equity share up to {:.3} exceeds total assets",
                1.0 / self.leverage_min
            )));
        }
        Ok(())
    }
}

/// Generates `n` balance sheets. Deterministic for a fixed seed.
pub fn synthesize_cohort(n: usize, seed: u64, params: &SynthParams) -> Result<Cohort> {
    if n < 2 {
        return Err(Error::invalid("a cohort needs at least two banks"));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let leverage = Uniform::new_inclusive(params.leverage_min, params.leverage_max)
        .map_err(|e| Error::invalid(e.to_string()))?;
    let rho = params.lending_borrowing_correlation;
    let z = |rng: &mut ChaCha8Rng| {
        let v: f64 = std_normal.sample(rng);
        v.clamp(-Z_CLAMP, Z_CLAMP)
    };

    let width = n.to_string().len().max(3);
    let mut banks = Vec::with_capacity(n);
    for i in 0..n {
        let total = (params.log_size_mean + params.log_size_sd * z(&mut rng)).exp();
        let lev: f64 = rng.sample(leverage);
        let z_lend = z(&mut rng);
        let z_borrow =
            (rho * z_lend + (1.0 - rho * rho).sqrt() * z(&mut rng)).clamp(-Z_CLAMP, Z_CLAMP);
        let lend = params.interbank_share_median * (params.interbank_share_sd * z_lend).exp();
        let borrow = params.interbank_share_median * (params.interbank_share_sd * z_borrow).exp();
        let id = format!("B{:0width$}", i + 1);
        banks.push(BankRecord::from_aggregates(
            id.clone(),
            format!("Synthetic bank {id}"),
            params.period,
            total / lev,
            total,
            total * lend,
            total * borrow,
        ));
    }
    Cohort::new(banks)
}

/// Ranges for random leverage networks built directly from ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverageRanges {
    /// Probability of each directed off-diagonal link.
    pub link_probability: f64,
    pub external: (f64, f64),
    /// Total interbank leverage of a bank with at least one link.
    pub interbank: (f64, f64),
    pub equity: (f64, f64),
}

impl Default for LeverageRanges {
    fn default() -> Self {
        LeverageRanges {
            link_probability: 0.3,
            external: (1.0, 30.0),
            interbank: (0.1, 5.0),
            equity: (1.0, 10.0),
        }
    }
}

/// A random single-asset leverage network with `n` banks. Link weights are
/// uniform and rescaled so each lender's row sums to a uniform draw.
pub fn random_leverage(n: usize, seed: u64, ranges: &LeverageRanges) -> Result<LeverageNetworks> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interbank = vec![0.0; n * n];
    let mut external = Vec::with_capacity(n);
    let mut equities = Vec::with_capacity(n);
    for i in 0..n {
        let row = &mut interbank[i * n..(i + 1) * n];
        for (j, v) in row.iter_mut().enumerate() {
            if j != i && rng.random::<f64>() < ranges.link_probability {
                *v = rng.random_range(0.01..1.0);
            }
        }
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            let target = rng.random_range(ranges.interbank.0..=ranges.interbank.1);
            row.iter_mut().for_each(|v| *v *= target / sum);
        }
        external.push(rng.random_range(ranges.external.0..=ranges.external.1));
        equities.push(rng.random_range(ranges.equity.0..=ranges.equity.1));
    }
    LeverageNetworks::from_parts(interbank, external, 1, equities)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let p = SynthParams::default();
        assert_eq!(
            synthesize_cohort(20, 7, &p).unwrap(),
            synthesize_cohort(20, 7, &p).unwrap()
        );
        assert_ne!(
            synthesize_cohort(20, 7, &p).unwrap(),
            synthesize_cohort(20, 8, &p).unwrap()
        );
    }

    #[test]
    fn full_size_cohort_is_valid() {
        let c = synthesize_cohort(183, 1, &SynthParams::default()).unwrap();
        assert_eq!(c.len(), 183);
        for b in c.banks() {
            assert!(b.is_valid(), "{b:?}");
            let lev = b.total_assets / b.equity;
            assert!((8.0 - 1e-9..=30.0 + 1e-9).contains(&lev));
        }
    }

    #[test]
    fn infeasible_parameters() {
        let p = SynthParams {
            leverage_min: 1.5,
            leverage_max: 2.0,
            interbank_share_median: 0.4,
            ..SynthParams::default()
        };
        assert!(matches!(
            synthesize_cohort(10, 1, &p),
            Err(Error::InvalidParameter(_))
        ));
        assert!(synthesize_cohort(1, 1, &SynthParams::default()).is_err());
    }
}
