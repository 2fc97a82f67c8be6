use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::SparseMatrix;

/// Symmetric bipartite adjacency over `N + M` nodes (users first), with the
/// edge `(u, i)` weighted `1 / sqrt(|N_u| |N_i|)` from train-set degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    num_users: usize,
    num_items: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<f64>,
    matrix: Arc<SparseMatrix>,
}

impl NormalizedAdjacency {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn num_nodes(&self) -> usize {
        self.num_users + self.num_items
    }

    /// Undirected `(user, item)` edges.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn matrix(&self) -> &Arc<SparseMatrix> {
        &self.matrix
    }

    /// Weight of undirected edge `k`.
    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    fn from_weighted(num_users: usize, num_items: usize, edges: Vec<(usize, usize)>, weights: Vec<f64>) -> Result<Self> {
        let mut triplets = Vec::with_capacity(2 * edges.len());
        for (&(u, i), &w) in edges.iter().zip(&weights) {
            triplets.push((u, num_users + i, w));
            triplets.push((num_users + i, u, w));
        }
        let n = num_users + num_items;
        let matrix = Arc::new(SparseMatrix::from_triplets(n, n, &triplets)?);
        Ok(NormalizedAdjacency {
            num_users,
            num_items,
            edges,
            weights,
            matrix,
        })
    }
}

pub fn build_adjacency(train: &[(usize, usize)], num_users: usize, num_items: usize) -> Result<NormalizedAdjacency> {
    if train.is_empty() {
        return Err(Error::Dataset("cannot build adjacency from an empty train set".into()));
    }
    let mut du = vec![0usize; num_users];
    let mut di = vec![0usize; num_items];
    for &(u, i) in train {
        if u >= num_users || i >= num_items {
            return Err(Error::InvalidArgument(format!(
                "edge ({u}, {i}) out of range for {num_users} users / {num_items} items"
            )));
        }
        du[u] += 1;
        di[i] += 1;
    }
    let weights = train
        .iter()
        .map(|&(u, i)| 1.0 / ((du[u] * di[i]) as f64).sqrt())
        .collect();
    NormalizedAdjacency::from_weighted(num_users, num_items, train.to_vec(), weights)
}

/// Drops `floor(ratio · E)` uniformly chosen undirected edges and rescales the
/// survivors by `1 / (1 - ratio)`. Degrees are not recomputed.
pub fn node_dropout<R: Rng + ?Sized>(adj: &NormalizedAdjacency, ratio: f64, rng: &mut R) -> Result<NormalizedAdjacency> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::InvalidArgument(format!("node dropout ratio {ratio} outside [0, 1)")));
    }
    if ratio == 0.0 {
        return Ok(adj.clone());
    }
    let e = adj.num_edges();
    let n_drop = (ratio * e as f64).floor() as usize;
    let mut dropped = vec![false; e];
    for k in rand::seq::index::sample(rng, e, n_drop) {
        dropped[k] = true;
    }
    let scale = 1.0 / (1.0 - ratio);
    let (edges, weights): (Vec<_>, Vec<_>) = adj
        .edges
        .iter()
        .zip(&adj.weights)
        .zip(&dropped)
        .filter(|(_, &d)| !d)
        .map(|((&edge, &w), _)| (edge, w * scale))
        .unzip();
    NormalizedAdjacency::from_weighted(adj.num_users, adj.num_items, edges, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn degree_two_by_degree_three() {
        // u0 -- i0, i1 ; i0 also linked to u1, u2.
        let train = [(0, 0), (0, 1), (1, 0), (2, 0)];
        let adj = build_adjacency(&train, 3, 2).unwrap();
        let v = adj.matrix().get(0, 3);
        assert!((v - 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((v - 0.408248).abs() < 1e-6);
    }

    #[test]
    fn single_edge_has_unit_entries() {
        let adj = build_adjacency(&[(0, 0)], 1, 1).unwrap();
        let d = adj.matrix().to_dense();
        assert_eq!(d.data(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn isolated_nodes_and_range_errors() {
        let adj = build_adjacency(&[(0, 0)], 3, 3).unwrap();
        assert_eq!(adj.matrix().row(2).count(), 0);
        assert!(build_adjacency(&[(3, 0)], 3, 3).is_err());
        assert!(build_adjacency(&[], 3, 3).is_err());
    }

    fn grid_edges(n: usize) -> Vec<(usize, usize)> {
        (0..n).flat_map(|u| (0..n).filter(move |i| (u + i) % 2 == 0).map(move |i| (u, i))).collect()
    }

    #[test]
    fn zero_ratio_keeps_matrix() {
        let adj = build_adjacency(&grid_edges(6), 6, 6).unwrap();
        let d = node_dropout(&adj, 0.0, &mut rng_from_seed(1)).unwrap();
        assert_eq!(d, adj);
    }

    #[test]
    fn half_ratio_keeps_half_the_edges() {
        let edges: Vec<_> = (0..10).flat_map(|u| (0..10).map(move |i| (u, i))).collect();
        let adj = build_adjacency(&edges, 10, 10).unwrap();
        assert_eq!(adj.num_edges(), 100);
        let d = node_dropout(&adj, 0.5, &mut rng_from_seed(3)).unwrap();
        assert_eq!(d.num_edges(), 50);
        assert_eq!(d.matrix().nnz(), 100);
        let dense = d.matrix().to_dense();
        assert_eq!(dense, dense.transpose());
        // survivors carry 0.1 * 2
        for (_, _, v) in d.matrix().triplets() {
            assert!((v - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn dropout_is_unbiased_in_expectation() {
        let edges: Vec<_> = (0..5).flat_map(|u| (0..8).map(move |i| (u, i))).collect();
        let adj = build_adjacency(&edges, 5, 8).unwrap();
        let n = adj.num_nodes();
        let mut acc = vec![0.0; n * n];
        let trials = 1000;
        let mut rng = rng_from_seed(99);
        for _ in 0..trials {
            let d = node_dropout(&adj, 0.1, &mut rng).unwrap();
            for (r, c, v) in d.matrix().triplets() {
                acc[r * n + c] += v;
            }
        }
        for (r, c, v) in adj.matrix().triplets() {
            let mean = acc[r * n + c] / trials as f64;
            assert!((mean - v).abs() / v < 0.05, "entry ({r},{c}): {mean} vs {v}");
        }
    }

    #[test]
    fn dropout_ratio_validated() {
        let adj = build_adjacency(&[(0, 0)], 1, 1).unwrap();
        assert!(node_dropout(&adj, 1.0, &mut rng_from_seed(0)).is_err());
        assert!(node_dropout(&adj, -0.1, &mut rng_from_seed(0)).is_err());
    }
}
