//! Balance-sheet data model and the leverage networks derived from it.
//!
//! Each bank's balance sheet splits into interbank and external items:
//!
//! ```text
//! A^e_i + A^b_i = D^e_i + D^b_i + E_i
//! ```
//!
//! External liabilities carry no field of their own in the input data and are
//! always the residual `D^e_i = A_i - D^b_i - E_i`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for balance-sheet identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// One institution's balance-sheet aggregates for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankRecord {
    pub bank_id: String,
    pub name: String,
    pub period: i32,
    pub equity: f64,
    pub total_assets: f64,
    pub interbank_assets: f64,
    pub interbank_liabilities: f64,
    pub external_assets: f64,
    pub external_liabilities: f64,
}

/// Reasons a record cannot enter a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    NegativeValue(&'static str),
    NonPositiveEquity,
    AssetIdentity { total: f64, parts: f64 },
    NegativeExternalLiabilities(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeValue(field) => write!(f, "negative {field}"),
            Violation::NonPositiveEquity => write!(f, "equity is not positive"),
            Violation::AssetIdentity { total, parts } => write!(
                f,
                "total_assets {total} differs from interbank + external assets {parts}"
            ),
            Violation::NegativeExternalLiabilities(v) => {
                write!(f, "implied external liabilities are negative ({v})")
            }
        }
    }
}

impl BankRecord {
    /// Builds a record from the reported aggregates. External assets and
    /// external liabilities are filled in as residuals.
    pub fn from_aggregates(
        bank_id: impl Into<String>,
        name: impl Into<String>,
        period: i32,
        equity: f64,
        total_assets: f64,
        interbank_assets: f64,
        interbank_liabilities: f64,
    ) -> Self {
        BankRecord {
            bank_id: bank_id.into(),
            name: name.into(),
            period,
            equity,
            total_assets,
            interbank_assets,
            interbank_liabilities,
            external_assets: total_assets - interbank_assets,
            external_liabilities: total_assets - interbank_liabilities - equity,
        }
    }

    pub fn total_liabilities(&self) -> f64 {
        self.external_liabilities + self.interbank_liabilities
    }

    /// Every invariant this record breaks, in a fixed order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let fields = [
            ("equity", self.equity),
            ("total_assets", self.total_assets),
            ("interbank_assets", self.interbank_assets),
            ("interbank_liabilities", self.interbank_liabilities),
            ("external_assets", self.external_assets),
        ];
        for (name, value) in fields {
            if value < 0.0 || value.is_nan() {
                out.push(Violation::NegativeValue(name));
            }
        }
        let parts = self.interbank_assets + self.external_assets;
        if !approx_eq(self.total_assets, parts) {
            out.push(Violation::AssetIdentity {
                total: self.total_assets,
                parts,
            });
        }
        if self.external_liabilities < -IDENTITY_TOLERANCE * self.total_assets.abs().max(1.0) {
            out.push(Violation::NegativeExternalLiabilities(
                self.external_liabilities,
            ));
        }
        if !(self.equity > 0.0) {
            out.push(Violation::NonPositiveEquity);
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= IDENTITY_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Validated banks for one period, in a fixed order shared by every matrix
/// derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    banks: Vec<BankRecord>,
    index: HashMap<String, usize>,
    asset_classes: Vec<String>,
    /// Row-major `n x m` external holdings, one column per asset class.
    holdings: Option<Vec<f64>>,
}

impl Cohort {
    /// Builds a cohort from valid records. Fails on duplicate ids or on any
    /// record that breaks a balance-sheet invariant.
    pub fn new(banks: Vec<BankRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(banks.len());
        for (pos, bank) in banks.iter().enumerate() {
            if index.insert(bank.bank_id.clone(), pos).is_some() {
                return Err(Error::DuplicateBank(bank.bank_id.clone()));
            }
            if let Some(v) = bank.violations().first() {
                return Err(Error::Validation {
                    bank_id: bank.bank_id.clone(),
                    message: v.to_string(),
                });
            }
        }
        Ok(Cohort {
            banks,
            index,
            asset_classes: Vec::new(),
            holdings: None,
        })
    }

    /// Attaches an external-asset breakdown. `holdings` is row-major
    /// `n x classes.len()` and each row must add up to the bank's external
    /// assets.
    pub fn with_breakdown(mut self, classes: Vec<String>, holdings: Vec<f64>) -> Result<Self> {
        let m = classes.len();
        if holdings.len() != self.banks.len() * m {
            return Err(Error::DimensionMismatch {
                expected: self.banks.len() * m,
                actual: holdings.len(),
            });
        }
        for (i, bank) in self.banks.iter().enumerate() {
            let row = &holdings[i * m..(i + 1) * m];
            if let Some(neg) = row.iter().position(|&v| v < 0.0) {
                return Err(Error::Validation {
                    bank_id: bank.bank_id.clone(),
                    message: format!("negative holding in asset class `{}`", classes[neg]),
                });
            }
            let sum: f64 = row.iter().sum();
            if !approx_eq(sum, bank.external_assets) {
                return Err(Error::Validation {
                    bank_id: bank.bank_id.clone(),
                    message: format!(
                        "total_assets {} differs from interbank + external assets {}",
                        bank.total_assets,
                        bank.interbank_assets + sum
                    ),
                });
            }
        }
        self.asset_classes = classes;
        self.holdings = Some(holdings);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.banks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.banks.is_empty()
    }

    pub fn banks(&self) -> &[BankRecord] {
        &self.banks
    }

    pub fn bank(&self, pos: usize) -> &BankRecord {
        &self.banks[pos]
    }

    pub fn position(&self, bank_id: &str) -> Option<usize> {
        self.index.get(bank_id).copied()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.banks.iter().map(|b| b.bank_id.as_str())
    }

    /// Asset classes of the external breakdown; empty when none was supplied.
    pub fn asset_classes(&self) -> &[String] {
        &self.asset_classes
    }

    pub fn holdings(&self) -> Option<&[f64]> {
        self.holdings.as_deref()
    }

    pub fn equities(&self) -> Vec<f64> {
        self.banks.iter().map(|b| b.equity).collect()
    }

    pub fn external_assets(&self) -> Vec<f64> {
        self.banks.iter().map(|b| b.external_assets).collect()
    }

    /// Equity weights `w_i = E_i / sum_j E_j`.
    pub fn equity_weights(&self) -> Vec<f64> {
        equity_weights(&self.equities())
    }
}

pub(crate) fn equity_weights(equities: &[f64]) -> Vec<f64> {
    let total: f64 = equities.iter().sum();
    equities.iter().map(|e| e / total).collect()
}

/// Directed interbank lending matrix: entry `(i, j)` is what `i` lends to `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ExposureMatrix {
    pub fn zeros(n: usize) -> Self {
        ExposureMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Row-major dense constructor. Rejects negative entries and a non-zero
    /// diagonal.
    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        if data.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::invalid("exposures must be non-negative"));
        }
        if (0..n).any(|i| data[i * n + i] != 0.0) {
            return Err(Error::invalid("exposure matrix diagonal must be zero"));
        }
        Ok(ExposureMatrix { n, data })
    }

    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: i.max(j) + 1,
                });
            }
            data[i * n + j] += v;
        }
        Self::from_dense(n, data)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, lender: usize, borrower: usize) -> f64 {
        self.data[lender * self.n + borrower]
    }

    pub fn row(&self, lender: usize) -> &[f64] {
        &self.data[lender * self.n..(lender + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i).iter().enumerate() {
                out[j] += v;
            }
        }
        out
    }

    /// Non-zero entries in row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for (j, &v) in self.row(i).iter().enumerate() {
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn link_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }
}

/// Interbank and external leverage derived from balance sheets.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageNetworks {
    n: usize,
    classes: usize,
    /// `l^b_ij = A^b_ij / E_i`, row-major.
    interbank: Vec<f64>,
    /// `l^e_ik = A^e_ik / E_i`, row-major `n x classes`.
    external: Vec<f64>,
    total_interbank: Vec<f64>,
    total_external: Vec<f64>,
    equities: Vec<f64>,
}

impl LeverageNetworks {
    /// Builds leverage networks directly from ratio data. Mostly useful for
    /// synthetic instances; [`derive_leverage`] is the balance-sheet route.
    pub fn from_parts(
        interbank: Vec<f64>,
        external: Vec<f64>,
        classes: usize,
        equities: Vec<f64>,
    ) -> Result<Self> {
        let n = equities.len();
        if interbank.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: interbank.len(),
            });
        }
        if classes == 0 || external.len() != n * classes {
            return Err(Error::DimensionMismatch {
                expected: n * classes.max(1),
                actual: external.len(),
            });
        }
        if interbank.iter().chain(&external).any(|&v| !(v >= 0.0)) {
            return Err(Error::invalid("leverage entries must be non-negative"));
        }
        if equities.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::invalid("equities must be positive"));
        }
        let total_interbank = (0..n)
            .map(|i| interbank[i * n..(i + 1) * n].iter().sum())
            .collect();
        let total_external = (0..n)
            .map(|i| external[i * classes..(i + 1) * classes].iter().sum())
            .collect();
        Ok(LeverageNetworks {
            n,
            classes,
            interbank,
            external,
            total_interbank,
            total_external,
            equities,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn asset_classes(&self) -> usize {
        self.classes
    }

    pub fn interbank(&self, i: usize, j: usize) -> f64 {
        self.interbank[i * self.n + j]
    }

    pub fn interbank_row(&self, i: usize) -> &[f64] {
        &self.interbank[i * self.n..(i + 1) * self.n]
    }

    pub fn external(&self, i: usize, k: usize) -> f64 {
        self.external[i * self.classes + k]
    }

    pub fn external_row(&self, i: usize) -> &[f64] {
        &self.external[i * self.classes..(i + 1) * self.classes]
    }

    /// `l^b_i`, interbank leverage out-strength.
    pub fn total_interbank(&self) -> &[f64] {
        &self.total_interbank
    }

    /// `l^e_i`, external leverage out-strength.
    pub fn total_external(&self) -> &[f64] {
        &self.total_external
    }

    /// `l_i = l^e_i + l^b_i`.
    pub fn total(&self) -> Vec<f64> {
        self.total_external
            .iter()
            .zip(&self.total_interbank)
            .map(|(e, b)| e + b)
            .collect()
    }

    pub fn equities(&self) -> &[f64] {
        &self.equities
    }

    pub fn equity_weights(&self) -> Vec<f64> {
        equity_weights(&self.equities)
    }

    /// Multiplies interbank leverage back by equity.
    pub fn exposures(&self) -> ExposureMatrix {
        let n = self.n;
        let data = (0..n * n)
            .map(|idx| self.interbank[idx] * self.equities[idx / n])
            .collect();
        ExposureMatrix { n, data }
    }
}

/// Divides every exposure and external holding by the holder's equity.
pub fn derive_leverage(cohort: &Cohort, exposures: &ExposureMatrix) -> Result<LeverageNetworks> {
    let n = cohort.len();
    if exposures.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: exposures.dim(),
        });
    }
    let equities = cohort.equities();
    if let Some(bad) = cohort.banks().iter().find(|b| !(b.equity > 0.0)) {
        return Err(Error::Validation {
            bank_id: bad.bank_id.clone(),
            message: Violation::NonPositiveEquity.to_string(),
        });
    }
    let interbank = (0..n * n)
        .map(|idx| exposures.as_slice()[idx] / equities[idx / n])
        .collect();
    let (classes, external) = match cohort.holdings() {
        Some(h) => {
            let m = cohort.asset_classes().len();
            let ext = h
                .iter()
                .enumerate()
                .map(|(idx, v)| v / equities[idx / m])
                .collect();
            (m, ext)
        }
        None => (
            1,
            cohort
                .banks()
                .iter()
                .map(|b| b.external_assets / b.equity)
                .collect(),
        ),
    };
    LeverageNetworks::from_parts(interbank, external, classes, equities)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank(id: &str, equity: f64, total: f64, ib_a: f64, ib_l: f64) -> BankRecord {
        BankRecord::from_aggregates(id, id, 2010, equity, total, ib_a, ib_l)
    }

    #[test]
    fn residual_external_items() {
        let b = bank("a", 10.0, 100.0, 20.0, 30.0);
        assert_eq!(b.external_assets, 80.0);
        assert_eq!(b.external_liabilities, 60.0);
        assert!(b.is_valid());
    }

    #[test]
    fn negative_external_liabilities_violate() {
        let b = bank("a", 50.0, 100.0, 20.0, 60.0);
        assert!(matches!(
            b.violations()[..],
            [Violation::NegativeExternalLiabilities(_)]
        ));
    }

    #[test]
    fn cohort_rejects_duplicates() {
        let err = Cohort::new(vec![
            bank("a", 1.0, 10.0, 1.0, 1.0),
            bank("a", 1.0, 10.0, 1.0, 1.0),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateBank(id) if id == "a"));
    }

    #[test]
    fn breakdown_must_match_external_assets() {
        let cohort = Cohort::new(vec![bank("a", 10.0, 100.0, 20.0, 30.0)]).unwrap();
        let err = cohort
            .clone()
            .with_breakdown(vec!["gov".into(), "corp".into()], vec![50.0, 20.0])
            .unwrap_err();
        assert!(matches!(err, Error::Validation { bank_id, .. } if bank_id == "a"));
        assert!(cohort
            .with_breakdown(vec!["gov".into(), "corp".into()], vec![50.0, 30.0])
            .is_ok());
    }

    #[test]
    fn leverage_ratio() {
        let cohort = Cohort::new(vec![
            bank("a", 10.0, 100.0, 20.0, 0.0),
            bank("b", 10.0, 100.0, 0.0, 20.0),
        ])
        .unwrap();
        let x = ExposureMatrix::from_triplets(2, &[(0, 1, 20.0)]).unwrap();
        let lev = derive_leverage(&cohort, &x).unwrap();
        assert_eq!(lev.interbank(0, 1), 2.0);
        assert_eq!(lev.interbank_row(1), &[0.0, 0.0]);
    }

    #[test]
    fn two_bank_leverage_example() {
        // E=(10,20), A^e=(50,40), A^b_12=30, A^b_21=10
        let cohort = Cohort::new(vec![
            bank("1", 10.0, 80.0, 30.0, 10.0),
            bank("2", 20.0, 50.0, 10.0, 30.0),
        ])
        .unwrap();
        let x = ExposureMatrix::from_triplets(2, &[(0, 1, 30.0), (1, 0, 10.0)]).unwrap();
        let lev = derive_leverage(&cohort, &x).unwrap();

        // Recompute each entry from the raw balance-sheet numbers.
        let expect_ext = [50.0 / 10.0, 40.0 / 20.0];
        let expect_ib = [[0.0, 30.0 / 10.0], [10.0 / 20.0, 0.0]];
        for i in 0..2 {
            assert_eq!(lev.total_external()[i], expect_ext[i]);
            for j in 0..2 {
                assert_eq!(lev.interbank(i, j), expect_ib[i][j]);
            }
        }
        assert_eq!(lev.total_external(), &[5.0, 2.0]);
        assert_eq!(lev.interbank(0, 1), 3.0);
        assert_eq!(lev.interbank(1, 0), 0.5);
        assert_eq!(lev.total(), vec![8.0, 2.5]);
    }

    #[test]
    fn dimension_mismatch() {
        let cohort = Cohort::new(vec![bank("a", 10.0, 100.0, 0.0, 0.0)]).unwrap();
        let err = derive_leverage(&cohort, &ExposureMatrix::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn exposure_matrix_rejects_self_loans() {
        assert!(ExposureMatrix::from_triplets(2, &[(1, 1, 3.0)]).is_err());
    }
}
