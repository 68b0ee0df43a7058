#![allow(dead_code)]

use hgb::graph::{HybridGraph, Labels};
use hgb::matrix::Matrix;
use rand::seq::index;
use rand::Rng;

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
}

/// Erdős–Rényi edge list, each pair present with probability `p`.
pub fn random_edges<R: Rng>(n: usize, p: f64, rng: &mut R) -> Vec<[usize; 2]> {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push([u, v]);
            }
        }
    }
    edges
}

pub fn random_hyperedges<R: Rng>(
    n: usize,
    count: usize,
    max_size: usize,
    rng: &mut R,
) -> Vec<Vec<usize>> {
    (0..count)
        .map(|_| {
            let k = rng.gen_range(1..=max_size.min(n));
            let mut e = index::sample(rng, n, k).into_vec();
            e.sort_unstable();
            e
        })
        .collect()
}

pub fn random_graph<R: Rng>(n: usize, rng: &mut R) -> HybridGraph {
    let edges = random_edges(n, 0.4, rng);
    let m = rng.gen_range(1..=n);
    let hyperedges = random_hyperedges(n, m, 4, rng);
    let weights = (0..m).map(|_| rng.gen_range(0.5..2.0)).collect();
    let labels = Labels::Classes {
        values: (0..n).map(|_| rng.gen_range(0..3)).collect(),
        num_classes: 3,
    };
    HybridGraph::new(random_matrix(n, 3, rng), labels)
        .with_edges(edges)
        .with_hyperedges(hyperedges)
        .with_weights(weights)
}
