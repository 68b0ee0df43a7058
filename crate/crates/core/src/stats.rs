//! Graph statistics and the sampler-preservation report.
//!
//! Node degree and clustering are computed on simple edges only; hyperedges
//! contribute just their count and mean size.

use crate::graph::HybridGraph;
use crate::sample::{SampleError, Sampler};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How undirected simple edges are counted.
///
/// Published benchmark tables list each undirected edge once per
/// direction, as a message-passing edge index would, and derive the
/// average node degree from that count. `Undirected` gives the textbook
/// figures.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeCounting {
    #[default]
    Undirected,
    BothDirections,
}

impl EdgeCounting {
    fn factor(self) -> usize {
        match self {
            EdgeCounting::Undirected => 1,
            EdgeCounting::BothDirections => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_hyperedges: usize,
    pub avg_node_degree: f64,
    pub avg_hyperedge_degree: f64,
    pub avg_clustering_coef: f64,
}

/// Mean of the local clustering coefficient over all nodes; nodes of
/// degree below two count as zero.
pub fn average_clustering(adj: &[Vec<usize>]) -> f64 {
    if adj.is_empty() {
        return 0.0;
    }
    let total: f64 = (0..adj.len())
        .into_par_iter()
        .map(|v| {
            let nbrs = &adj[v];
            let d = nbrs.len();
            if d < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for &u in nbrs {
                links += sorted_intersection_count(nbrs, &adj[u]);
            }
            // Each triangle edge among neighbors is seen from both ends.
            let triangles = links / 2;
            2.0 * triangles as f64 / (d * (d - 1)) as f64
        })
        .sum();
    total / adj.len() as f64
}

fn sorted_intersection_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

pub fn compute_stats(g: &HybridGraph) -> GraphStats {
    compute_stats_counting(g, EdgeCounting::Undirected)
}

pub fn compute_stats_counting(g: &HybridGraph, counting: EdgeCounting) -> GraphStats {
    let n = g.num_nodes();
    let num_edges = g.num_edges() * counting.factor();
    let m = g.num_hyperedges();
    let member_total: usize = g.hyperedges.iter().map(Vec::len).sum();
    GraphStats {
        num_nodes: n,
        num_edges,
        num_hyperedges: m,
        avg_node_degree: if n == 0 {
            0.0
        } else {
            2.0 * num_edges as f64 / n as f64
        },
        avg_hyperedge_degree: if m == 0 {
            0.0
        } else {
            member_total as f64 / m as f64
        },
        avg_clustering_coef: average_clustering(&g.adjacency()),
    }
}

/// Element-wise means of [`GraphStats`] over sampled subgraphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerReport {
    pub trials: usize,
    pub num_nodes: f64,
    pub num_edges: f64,
    pub num_hyperedges: f64,
    pub avg_node_degree: f64,
    pub avg_hyperedge_degree: f64,
    pub avg_clustering_coef: f64,
}

/// Runs `sampler` `trials` times, trial `i` seeded with `seed + i`, and
/// averages the statistics of the resulting subgraphs.
pub fn sampler_report(
    g: &HybridGraph,
    sampler: &Sampler,
    trials: usize,
    seed: u64,
    counting: EdgeCounting,
) -> Result<SamplerReport, SampleError> {
    if trials == 0 {
        return Err(SampleError::NoTrials);
    }
    let per_trial: Vec<GraphStats> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
            let sub = sampler.sample(g, &mut rng)?;
            Ok(compute_stats_counting(&sub.to_graph(), counting))
        })
        .collect::<Result<_, SampleError>>()?;
    let t = trials as f64;
    let mean = |f: fn(&GraphStats) -> f64| per_trial.iter().map(f).sum::<f64>() / t;
    Ok(SamplerReport {
        trials,
        num_nodes: mean(|s| s.num_nodes as f64),
        num_edges: mean(|s| s.num_edges as f64),
        num_hyperedges: mean(|s| s.num_hyperedges as f64),
        avg_node_degree: mean(|s| s.avg_node_degree),
        avg_hyperedge_degree: mean(|s| s.avg_hyperedge_degree),
        avg_clustering_coef: mean(|s| s.avg_clustering_coef),
    })
}
