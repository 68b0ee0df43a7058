//! Small generated datasets for tests and demos.

use crate::graph::{canonicalize, HybridGraph, Labels};
use crate::matrix::Matrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Parameters of [`two_blobs`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlobsConfig {
    pub nodes: usize,
    pub feature_dim: usize,
    /// Half-width of the uniform noise added to every feature.
    pub noise: f64,
    pub avg_degree: f64,
    /// Probability that an edge joins two nodes of the same class.
    pub homophily: f64,
    pub hyperedges: usize,
    pub hyperedge_size: usize,
}

impl Default for BlobsConfig {
    fn default() -> Self {
        BlobsConfig {
            nodes: 200,
            feature_dim: 8,
            noise: 0.3,
            avg_degree: 6.0,
            homophily: 0.9,
            hyperedges: 60,
            hyperedge_size: 4,
        }
    }
}

/// Two balanced classes whose features are the class one-hot plus noise.
///
/// Node `v` has class `v % 2`. Edges are drawn with the configured
/// homophily and hyperedges group nodes of a single class, so both edge
/// types carry the label signal.
pub fn two_blobs(cfg: &BlobsConfig, seed: u64) -> HybridGraph {
    assert!(
        cfg.nodes >= 4 && cfg.feature_dim >= 2,
        "need at least 4 nodes and 2 feature columns"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.nodes;
    let labels: Vec<usize> = (0..n).map(|v| v % 2).collect();
    let mut x = Matrix::zeros(n, cfg.feature_dim);
    for v in 0..n {
        x[(v, labels[v])] = 1.0;
        for j in 0..cfg.feature_dim {
            x[(v, j)] += rng.gen_range(-cfg.noise..=cfg.noise);
        }
    }

    let class_members: [Vec<usize>; 2] = [(0..n).step_by(2).collect(), (1..n).step_by(2).collect()];
    let target = (cfg.avg_degree * n as f64 / 2.0).round() as usize;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let mut attempts = 0;
    while edges.len() < target && attempts < 20 * target + 100 {
        attempts += 1;
        let u = rng.gen_range(0..n);
        let class = if rng.gen_bool(cfg.homophily) {
            labels[u]
        } else {
            1 - labels[u]
        };
        let pool = &class_members[class];
        let v = pool[rng.gen_range(0..pool.len())];
        if u != v && seen.insert((u.min(v), u.max(v))) {
            edges.push([u.min(v), u.max(v)]);
        }
    }
    edges.sort_unstable();

    let mut hyperedges = Vec::with_capacity(cfg.hyperedges);
    for _ in 0..cfg.hyperedges {
        let pool = &class_members[rng.gen_range(0..2)];
        let k = cfg.hyperedge_size.clamp(1, pool.len());
        hyperedges.push(
            index::sample(&mut rng, pool.len(), k)
                .into_iter()
                .map(|i| pool[i])
                .collect(),
        );
    }

    HybridGraph::new(
        x,
        Labels::Classes {
            values: labels,
            num_classes: 2,
        },
    )
    .with_edges(edges)
    .with_hyperedges(canonicalize(hyperedges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_and_deterministic() {
        let a = two_blobs(&BlobsConfig::default(), 3);
        assert!(a.is_valid());
        assert_eq!(a, two_blobs(&BlobsConfig::default(), 3));
        assert_ne!(a, two_blobs(&BlobsConfig::default(), 4));
        assert_eq!(a.num_edges(), 600);
    }

    #[test]
    fn hyperedges_are_single_class() {
        let g = two_blobs(&BlobsConfig::default(), 1);
        let Labels::Classes { values, .. } = &g.labels else {
            unreachable!()
        };
        for e in &g.hyperedges {
            assert!(e.iter().all(|&v| values[v] == values[e[0]]));
        }
    }
}
