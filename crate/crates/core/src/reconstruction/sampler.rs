use rand::Rng;

use super::ReconstructionModel;
use crate::seed;

/// Directed 0/1 support, stored as `(lender, borrower)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Adjacency {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Self {
        debug_assert!(edges.iter().all(|&(i, j)| i != j && i < n && j < n));
        Adjacency { n, edges }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn link_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, lender: usize, borrower: usize) -> bool {
        self.edges.contains(&(lender, borrower))
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(i, _) in &self.edges {
            d[i] += 1;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(_, j) in &self.edges {
            d[j] += 1;
        }
        d
    }
}

/// Draws each unordered pair with probability `p_ij`, then orients it with a
/// fair coin. At most one direction per pair.
pub fn sample_adjacency(model: &ReconstructionModel, seed: u64) -> Adjacency {
    let n = model.len();
    let mut rng = seed::rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = model.probability(i, j);
            if p > 0.0 && rng.random::<f64>() < p {
                if rng.random::<bool>() {
                    edges.push((i, j));
                } else {
                    edges.push((j, i));
                }
            }
        }
    }
    Adjacency::new(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::{rebalance, Rebalanced};

    fn dummy(n: usize) -> Rebalanced {
        rebalance(&vec![1.0; n], &vec![1.0; n]).unwrap()
    }

    #[test]
    fn zero_probability_gives_empty_graph() {
        let m = ReconstructionModel::with_z(vec![0.2; 5], 0.0, 0.05, dummy(5));
        assert_eq!(sample_adjacency(&m, 3).link_count(), 0);
    }

    #[test]
    fn certain_pair_always_present() {
        // q / (1 + q) rounds to exactly 1 for huge z
        let m = ReconstructionModel::with_z(vec![0.5, 0.5], 1e300, 0.05, dummy(2));
        assert_eq!(m.probability(0, 1), 1.0);
        let mut forward = 0;
        for s in 0..10 {
            let a = sample_adjacency(&m, s);
            assert_eq!(a.link_count(), 1);
            if a.contains(0, 1) {
                forward += 1;
            }
        }
        assert!((1..10).contains(&forward), "forward = {forward}");
    }

    #[test]
    fn same_seed_same_graph() {
        let m = ReconstructionModel::with_z(vec![0.1, 0.2, 0.3, 0.4], 5.0, 0.05, dummy(4));
        assert_eq!(sample_adjacency(&m, 11), sample_adjacency(&m, 11));
    }
}
