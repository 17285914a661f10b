//! Reconstruction of bilateral exposure networks from each bank's total
//! interbank lending and borrowing.
//!
//! The pipeline is: rebalance the two market sides to a common volume, give
//! each bank a fitness equal to its mean lending/borrowing propensity,
//! calibrate the fitness-model link probability
//!
//! ```text
//! p_ij = z x_i x_j / (1 + z x_i x_j)
//! ```
//!
//! to a target density, sample a directed support and fit weights on it with
//! iterative proportional fitting.

mod ensemble;
mod ipf;
mod sampler;

pub use ensemble::{
    generate_ensemble, load_ensemble, member_seed, network_file_name, save_ensemble,
    EnsembleManifest, EnsembleSettings, LoadedEnsemble, MemberDiagnostics, NetworkEnsemble,
    BREAKDOWN_FILE, COHORT_FILE, MANIFEST_FILE, MAX_RESAMPLES,
};
pub use ipf::{
    fit_weights, FitDiagnostics, IpfSettings, DEFAULT_IPF_TOLERANCE, MAX_IPF_ITERATIONS,
};
pub use sampler::{sample_adjacency, Adjacency};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Cohort;

/// Relative tolerance on the expected link count when calibrating `z`.
pub const CALIBRATION_TOLERANCE: f64 = 1e-8;

/// Market totals after rebalancing and the per-bank propensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rebalanced {
    /// `min(sum A_i, sum L_i)`.
    pub total_volume: f64,
    /// `A_i / sum_j A_j`.
    pub lending: Vec<f64>,
    /// `L_i / sum_j L_j`.
    pub borrowing: Vec<f64>,
}

pub fn rebalance_totals(cohort: &Cohort) -> Result<Rebalanced> {
    let assets: Vec<f64> = cohort.banks().iter().map(|b| b.interbank_assets).collect();
    let liabilities: Vec<f64> = cohort
        .banks()
        .iter()
        .map(|b| b.interbank_liabilities)
        .collect();
    rebalance(&assets, &liabilities)
}

pub fn rebalance(assets: &[f64], liabilities: &[f64]) -> Result<Rebalanced> {
    if assets.len() != liabilities.len() {
        return Err(Error::DimensionMismatch {
            expected: assets.len(),
            actual: liabilities.len(),
        });
    }
    let total_a: f64 = assets.iter().sum();
    let total_l: f64 = liabilities.iter().sum();
    if !(total_a > 0.0 && total_l > 0.0) {
        return Err(Error::NoInterbankVolume);
    }
    Ok(Rebalanced {
        total_volume: total_a.min(total_l),
        lending: assets.iter().map(|a| a / total_a).collect(),
        borrowing: liabilities.iter().map(|l| l / total_l).collect(),
    })
}

/// `x_i = (A_i/A + L_i/L) / 2`.
pub fn compute_fitness(lending: &[f64], borrowing: &[f64]) -> Vec<f64> {
    lending
        .iter()
        .zip(borrowing)
        .map(|(a, l)| 0.5 * (a + l))
        .collect()
}

#[inline]
fn link_probability(z: f64, xi: f64, xj: f64) -> f64 {
    let q = z * xi * xj;
    q / (1.0 + q)
}

/// Expected number of undirected links, `1/2 sum_i sum_{j != i} p_ij`.
pub fn expected_links(fitness: &[f64], z: f64) -> f64 {
    let mut total = 0.0;
    for (i, &xi) in fitness.iter().enumerate() {
        for &xj in &fitness[i + 1..] {
            total += link_probability(z, xi, xj);
        }
    }
    total
}

/// Target link count for a density: `density * n * (n - 1)`.
pub fn target_links(n: usize, density: f64) -> f64 {
    density * n as f64 * (n as f64 - 1.0)
}

/// Finds `z` whose expected link count matches `density * n * (n-1)`.
///
/// The expectation is strictly increasing in `z` and bounded by the number of
/// pairs with positive fitness product, so the root is bracketed by doubling
/// and then bisected.
pub fn calibrate_z(fitness: &[f64], density: f64) -> Result<f64> {
    if !(density > 0.0 && density < 1.0) {
        return Err(Error::invalid(format!(
            "density {density} must lie in (0, 1)"
        )));
    }
    let positive = fitness.iter().filter(|&&x| x > 0.0).count();
    if positive < 2 {
        return Err(Error::invalid(
            "calibration needs at least two banks with positive fitness",
        ));
    }
    let supremum = positive * (positive - 1) / 2;
    let target = target_links(fitness.len(), density);
    if target >= supremum as f64 {
        return Err(Error::InfeasibleDensity { target, supremum });
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    while expected_links(fitness, hi) < target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InfeasibleDensity { target, supremum });
        }
    }
    let mut best = hi;
    let mut best_err = f64::INFINITY;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let value = expected_links(fitness, mid);
        let err = (value - target).abs();
        if err < best_err {
            best = mid;
            best_err = err;
        }
        if err <= 1e-3 * CALIBRATION_TOLERANCE * target {
            break;
        }
        if value < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// Calibrated fitness model for one cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionModel {
    pub fitness: Vec<f64>,
    pub z: f64,
    pub density: f64,
    pub target_links: f64,
    pub rebalanced: Rebalanced,
    /// Row-major symmetric `n x n` probabilities with a zero diagonal.
    link_probabilities: Vec<f64>,
}

impl ReconstructionModel {
    pub fn calibrate(cohort: &Cohort, density: f64) -> Result<Self> {
        Self::from_rebalanced(rebalance_totals(cohort)?, density)
    }

    pub fn from_rebalanced(rebalanced: Rebalanced, density: f64) -> Result<Self> {
        let fitness = compute_fitness(&rebalanced.lending, &rebalanced.borrowing);
        let z = calibrate_z(&fitness, density)?;
        Ok(Self::with_z(fitness, z, density, rebalanced))
    }

    /// Builds a model for a given `z` without calibrating.
    pub fn with_z(fitness: Vec<f64>, z: f64, density: f64, rebalanced: Rebalanced) -> Self {
        let n = fitness.len();
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = link_probability(z, fitness[i], fitness[j]);
                p[i * n + j] = v;
                p[j * n + i] = v;
            }
        }
        ReconstructionModel {
            target_links: target_links(n, density),
            fitness,
            z,
            density,
            rebalanced,
            link_probabilities: p,
        }
    }

    pub fn len(&self) -> usize {
        self.fitness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitness.is_empty()
    }

    pub fn probability(&self, i: usize, j: usize) -> f64 {
        self.link_probabilities[i * self.len() + j]
    }

    pub fn expected_links(&self) -> f64 {
        expected_links(&self.fitness, self.z)
    }
}
