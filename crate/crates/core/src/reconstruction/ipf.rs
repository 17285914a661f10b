use serde::{Deserialize, Serialize};

use super::Adjacency;
use crate::model::ExposureMatrix;

/// Maximum absolute deviation of normalized margins accepted as converged.
pub const DEFAULT_IPF_TOLERANCE: f64 = 0.01;
pub const MAX_IPF_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IpfSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IpfSettings {
    fn default() -> Self {
        IpfSettings {
            tolerance: DEFAULT_IPF_TOLERANCE,
            max_iterations: MAX_IPF_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    /// `max_i |sum_j pi_ij - A_i/A|` at exit.
    pub row_residual: f64,
    /// `max_j |sum_i pi_ij - L_j/L|` at exit.
    pub col_residual: f64,
    pub converged: bool,
}

/// Iterative proportional fitting of relative exposures `pi_ij` on a fixed
/// support, starting from uniform weights. Rows are scaled to lending
/// propensities, then columns to borrowing propensities, until both margin
/// residuals fall below the tolerance. Returns `pi * total_volume`.
pub fn fit_weights(
    adjacency: &Adjacency,
    lending: &[f64],
    borrowing: &[f64],
    total_volume: f64,
    settings: IpfSettings,
) -> (ExposureMatrix, FitDiagnostics) {
    let n = adjacency.len();
    debug_assert_eq!(lending.len(), n);
    debug_assert_eq!(borrowing.len(), n);
    let edges = adjacency.edges();
    let mut w = vec![1.0 / edges.len().max(1) as f64; edges.len()];
    let mut rows = vec![0.0; n];
    let mut cols = vec![0.0; n];

    let sums = |w: &[f64], rows: &mut [f64], cols: &mut [f64]| {
        rows.iter_mut().for_each(|v| *v = 0.0);
        cols.iter_mut().for_each(|v| *v = 0.0);
        for (&(i, j), &v) in edges.iter().zip(w) {
            rows[i] += v;
            cols[j] += v;
        }
    };
    let residual = |sums: &[f64], target: &[f64]| {
        sums.iter()
            .zip(target)
            .map(|(s, t)| (s - t).abs())
            .fold(0.0, f64::max)
    };

    let mut diag = FitDiagnostics {
        iterations: 0,
        row_residual: f64::INFINITY,
        col_residual: f64::INFINITY,
        converged: false,
    };
    for it in 1..=settings.max_iterations {
        sums(&w, &mut rows, &mut cols);
        for (&(i, _), v) in edges.iter().zip(w.iter_mut()) {
            *v = if rows[i] > 0.0 {
                *v * lending[i] / rows[i]
            } else {
                0.0
            };
        }
        sums(&w, &mut rows, &mut cols);
        for (&(_, j), v) in edges.iter().zip(w.iter_mut()) {
            *v = if cols[j] > 0.0 {
                *v * borrowing[j] / cols[j]
            } else {
                0.0
            };
        }
        sums(&w, &mut rows, &mut cols);
        diag.iterations = it;
        diag.row_residual = residual(&rows, lending);
        diag.col_residual = residual(&cols, borrowing);
        if diag.row_residual < settings.tolerance && diag.col_residual < settings.tolerance {
            diag.converged = true;
            break;
        }
    }
    if edges.is_empty() {
        diag.row_residual = residual(&rows, lending);
        diag.col_residual = residual(&cols, borrowing);
    }

    let mut matrix = ExposureMatrix::zeros(n);
    let triplets: Vec<_> = edges
        .iter()
        .zip(&w)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&(i, j), &v)| (i, j, v * total_volume))
        .collect();
    if !triplets.is_empty() {
        matrix = ExposureMatrix::from_triplets(n, &triplets).expect("support has no self-loops");
    }
    (matrix, diag)
}
