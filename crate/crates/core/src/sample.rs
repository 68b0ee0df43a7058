//! Subgraph samplers with hyperedge masking.
//!
//! The three GraphSAINT-style samplers pick nodes from simple-edge
//! information only:
//!
//! * node sampler: `budget` nodes drawn without replacement with weight
//!   `(deg(v) + 1)^2`;
//! * edge sampler: `budget` edges drawn without replacement with weight
//!   `1/deg(u) + 1/deg(v)`, keeping both endpoints;
//! * random-walk sampler: uniform roots, each walking `walk_length` steps.
//!
//! Two uniform baselines sample nodes or hyperedges directly. Every sampler
//! ends in [`induce`]: simple edges with both endpoints sampled survive, and
//! every hyperedge touching the sample survives with its members masked to
//! the sample.
//!
//! Weighted draws are sequential: after each pick the chosen item leaves the
//! pool and the remaining weights are renormalized.

use crate::graph::{HybridGraph, Labels};
use crate::matrix::Matrix;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SampleError {
    #[error("budget {budget} is out of range 1..={max}")]
    BudgetOutOfRange { budget: usize, max: usize },
    #[error("the graph has no simple edges to sample")]
    NoEdges,
    #[error("the graph has no hyperedges to sample")]
    NoHyperedges,
    #[error("the graph has no nodes")]
    NoNodes,
    #[error("cannot induce a subgraph on an empty node set")]
    EmptyNodeSet,
    #[error("node {node} is out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("at least one trial is required")]
    NoTrials,
}

/// An induced subgraph with masked hyperedges, in local indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledSubgraph {
    /// Original indices of the sampled nodes, ascending. Local index `i`
    /// is original node `node_ids[i]`.
    pub node_ids: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
    pub hyperedges: Vec<Vec<usize>>,
    /// Original index of each retained hyperedge.
    pub hyperedge_ids: Vec<usize>,
    pub hyperedge_weights: Vec<f64>,
    pub hyperedge_features: Option<Matrix>,
    pub node_features: Matrix,
    pub labels: Labels,
    /// Local parent; nodes whose parent was not sampled become top level.
    pub parent: Vec<usize>,
}

impl SampledSubgraph {
    /// Local index of an original node, if it was sampled.
    pub fn local(&self, original: usize) -> Option<usize> {
        self.node_ids.binary_search(&original).ok()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn to_graph(&self) -> HybridGraph {
        HybridGraph {
            node_features: self.node_features.clone(),
            hyperedge_features: self.hyperedge_features.clone(),
            simple_edges: self.edges.clone(),
            hyperedges: self.hyperedges.clone(),
            hyperedge_weights: self.hyperedge_weights.clone(),
            parent: self.parent.clone(),
            labels: self.labels.clone(),
        }
    }
}

/// Induced subgraph on `nodes` (duplicates ignored) with hyperedge masking.
pub fn induce(g: &HybridGraph, nodes: &[usize]) -> Result<SampledSubgraph, SampleError> {
    if nodes.is_empty() {
        return Err(SampleError::EmptyNodeSet);
    }
    let n = g.num_nodes();
    let mut node_ids = nodes.to_vec();
    node_ids.sort_unstable();
    node_ids.dedup();
    if let Some(&node) = node_ids.last().filter(|&&v| v >= n) {
        return Err(SampleError::NodeOutOfRange { node, num_nodes: n });
    }
    let mut local = vec![usize::MAX; n];
    for (i, &v) in node_ids.iter().enumerate() {
        local[v] = i;
    }
    let keep = |v: usize| local[v] != usize::MAX;

    let edges = g
        .simple_edges
        .iter()
        .filter(|&&[u, v]| keep(u) && keep(v))
        .map(|&[u, v]| [local[u], local[v]])
        .collect();

    let mut hyperedges = Vec::new();
    let mut hyperedge_ids = Vec::new();
    for (e, members) in g.hyperedges.iter().enumerate() {
        let masked: Vec<usize> = members
            .iter()
            .filter(|&&v| keep(v))
            .map(|&v| local[v])
            .collect();
        if !masked.is_empty() {
            hyperedges.push(masked);
            hyperedge_ids.push(e);
        }
    }

    let parent = node_ids
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if keep(g.parent[v]) {
                local[g.parent[v]]
            } else {
                i
            }
        })
        .collect();

    Ok(SampledSubgraph {
        hyperedge_weights: hyperedge_ids
            .iter()
            .map(|&e| g.hyperedge_weights[e])
            .collect(),
        hyperedge_features: g
            .hyperedge_features
            .as_ref()
            .map(|m| m.select_rows(&hyperedge_ids)),
        node_features: g.node_features.select_rows(&node_ids),
        labels: g.labels.select(&node_ids),
        node_ids,
        edges,
        hyperedges,
        hyperedge_ids,
        parent,
    })
}

/// Binary indexed tree over non-negative weights.
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        for i in 1..=n {
            tree[i] += weights[i - 1];
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                tree[j] += tree[i];
            }
        }
        Self { tree }
    }

    fn add(&mut self, i: usize, delta: f64) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    fn total(&self) -> f64 {
        let mut i = self.tree.len() - 1;
        let mut s = 0.0;
        while i > 0 {
            s += self.tree[i];
            i &= i - 1;
        }
        s
    }

    /// Item `i` with `prefix(i) <= target < prefix(i + 1)`.
    fn find(&self, mut target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            if pos + step <= n && self.tree[pos + step] <= target {
                pos += step;
                target -= self.tree[pos];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }
}

/// Draws `k` distinct indices; each draw picks among the remaining items
/// with probability proportional to their weight. Returned in draw order.
///
/// Zero-weight items are only drawn once every positive weight is used up,
/// and then uniformly.
pub fn weighted_draws<R: Rng + ?Sized>(weights: &[f64], k: usize, rng: &mut R) -> Vec<usize> {
    assert!(
        k <= weights.len(),
        "cannot draw {k} of {} items",
        weights.len()
    );
    let mut remaining = weights.to_vec();
    let mut tree = Fenwick::new(weights);
    let mut out = Vec::with_capacity(k);
    let mut live: usize = weights.iter().filter(|&&w| w > 0.0).count();
    while out.len() < k {
        let pick = if live > 0 {
            let target = rng.gen::<f64>() * tree.total();
            let mut i = tree.find(target);
            if remaining[i] <= 0.0 {
                // Rounding drift in the tree; take the next live item.
                i = (0..weights.len())
                    .map(|d| (i + d) % weights.len())
                    .find(|&j| remaining[j] > 0.0)
                    .expect("live item");
            }
            live -= 1;
            i
        } else {
            let zeros: Vec<usize> = (0..weights.len())
                .filter(|&j| remaining[j] == 0.0 && !out.contains(&j))
                .collect();
            zeros[rng.gen_range(0..zeros.len())]
        };
        tree.add(pick, -remaining[pick]);
        remaining[pick] = 0.0;
        out.push(pick);
    }
    out
}

fn check_budget(budget: usize, max: usize) -> Result<(), SampleError> {
    if budget == 0 || budget > max {
        Err(SampleError::BudgetOutOfRange { budget, max })
    } else {
        Ok(())
    }
}

/// Node sampler: weight `(deg(v) + 1)^2`.
pub fn sample_node<R: Rng + ?Sized>(
    g: &HybridGraph,
    budget: usize,
    rng: &mut R,
) -> Result<SampledSubgraph, SampleError> {
    check_budget(budget, g.num_nodes())?;
    let weights: Vec<f64> = g
        .degrees()
        .iter()
        .map(|&d| ((d + 1) * (d + 1)) as f64)
        .collect();
    induce(g, &weighted_draws(&weights, budget, rng))
}

/// Edge sampler: weight `1/deg(u) + 1/deg(v)`; sampled nodes are the
/// endpoints of the drawn edges.
pub fn sample_edge<R: Rng + ?Sized>(
    g: &HybridGraph,
    budget_edges: usize,
    rng: &mut R,
) -> Result<SampledSubgraph, SampleError> {
    if g.num_edges() == 0 {
        return Err(SampleError::NoEdges);
    }
    check_budget(budget_edges, g.num_edges())?;
    let deg = g.degrees();
    let weights: Vec<f64> = g
        .simple_edges
        .iter()
        .map(|&[u, v]| 1.0 / deg[u] as f64 + 1.0 / deg[v] as f64)
        .collect();
    let nodes: Vec<usize> = weighted_draws(&weights, budget_edges, rng)
        .into_iter()
        .flat_map(|e| g.simple_edges[e])
        .collect();
    induce(g, &nodes)
}

/// Random-walk sampler: `num_roots` uniform roots (repeats allowed), each
/// walking `walk_length` uniform steps over simple edges. A walk stops
/// early at a node without neighbors.
pub fn sample_rw<R: Rng + ?Sized>(
    g: &HybridGraph,
    num_roots: usize,
    walk_length: usize,
    rng: &mut R,
) -> Result<SampledSubgraph, SampleError> {
    let n = g.num_nodes();
    if n == 0 {
        return Err(SampleError::NoNodes);
    }
    if num_roots == 0 {
        return Err(SampleError::BudgetOutOfRange {
            budget: 0,
            max: usize::MAX,
        });
    }
    let adj = g.adjacency();
    let mut visited = Vec::with_capacity(num_roots * (walk_length + 1));
    for _ in 0..num_roots {
        let mut v = rng.gen_range(0..n);
        visited.push(v);
        for _ in 0..walk_length {
            let nbrs = &adj[v];
            if nbrs.is_empty() {
                break;
            }
            v = nbrs[rng.gen_range(0..nbrs.len())];
            visited.push(v);
        }
    }
    induce(g, &visited)
}

/// Uniform node subset of size `budget`.
pub fn sample_random_node<R: Rng + ?Sized>(
    g: &HybridGraph,
    budget: usize,
    rng: &mut R,
) -> Result<SampledSubgraph, SampleError> {
    check_budget(budget, g.num_nodes())?;
    induce(g, &index::sample(rng, g.num_nodes(), budget).into_vec())
}

/// Uniform subset of `budget` hyperedges; their members form the node set.
pub fn sample_random_hyperedge<R: Rng + ?Sized>(
    g: &HybridGraph,
    budget: usize,
    rng: &mut R,
) -> Result<SampledSubgraph, SampleError> {
    if g.num_hyperedges() == 0 {
        return Err(SampleError::NoHyperedges);
    }
    check_budget(budget, g.num_hyperedges())?;
    let nodes: Vec<usize> = index::sample(rng, g.num_hyperedges(), budget)
        .into_iter()
        .flat_map(|e| g.hyperedges[e].iter().copied())
        .collect();
    induce(g, &nodes)
}

/// A sampler and its size parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Sampler {
    Node { budget: usize },
    Edge { budget_edges: usize },
    Rw { roots: usize, walk_length: usize },
    RandNode { budget: usize },
    RandHyperedge { budget: usize },
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(
        &self,
        g: &HybridGraph,
        rng: &mut R,
    ) -> Result<SampledSubgraph, SampleError> {
        match *self {
            Sampler::Node { budget } => sample_node(g, budget, rng),
            Sampler::Edge { budget_edges } => sample_edge(g, budget_edges, rng),
            Sampler::Rw { roots, walk_length } => sample_rw(g, roots, walk_length, rng),
            Sampler::RandNode { budget } => sample_random_node(g, budget, rng),
            Sampler::RandHyperedge { budget } => sample_random_hyperedge(g, budget, rng),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Sampler::Node { .. } => "node",
            Sampler::Edge { .. } => "edge",
            Sampler::Rw { .. } => "rw",
            Sampler::RandNode { .. } => "rand-node",
            Sampler::RandHyperedge { .. } => "rand-hyperedge",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph(n: usize) -> HybridGraph {
        HybridGraph::new(
            Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()),
            Labels::Values(vec![0.0; n]),
        )
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn masking_rule() {
        let g = graph(5).with_hyperedges(vec![vec![0, 1, 2], vec![3, 4]]);
        let s = induce(&g, &[0, 1, 3]).unwrap();
        assert_eq!(s.hyperedges, vec![vec![0, 1], vec![2]]);
        assert_eq!(s.hyperedge_ids, vec![0, 1]);
    }

    #[test]
    fn untouched_hyperedge_is_dropped() {
        let g = graph(6).with_hyperedges(vec![vec![4, 5]]);
        let s = induce(&g, &[0, 1]).unwrap();
        assert!(s.hyperedges.is_empty());
    }

    #[test]
    fn full_induction_is_identity() {
        let g = graph(4)
            .with_edges([[0, 1], [2, 3]])
            .with_hyperedges(vec![vec![3, 1, 0]])
            .with_weights(vec![2.5])
            .with_parent(vec![1, 1, 3, 3]);
        let s = induce(&g, &[3, 2, 1, 0, 2]).unwrap();
        assert_eq!(s.to_graph(), g);
    }

    #[test]
    fn induce_errors() {
        let g = graph(3);
        assert_eq!(induce(&g, &[]), Err(SampleError::EmptyNodeSet));
        assert_eq!(
            induce(&g, &[0, 3]),
            Err(SampleError::NodeOutOfRange {
                node: 3,
                num_nodes: 3
            })
        );
    }

    #[test]
    fn parent_outside_sample_becomes_self() {
        let g = graph(3).with_parent(vec![2, 2, 2]);
        let s = induce(&g, &[0, 1]).unwrap();
        assert_eq!(s.parent, vec![0, 1]);
    }

    #[test]
    fn full_budgets_take_everything() {
        let g = graph(5).with_edges([[0, 1], [1, 2], [3, 4]]);
        assert_eq!(
            sample_node(&g, 5, &mut rng(1)).unwrap().node_ids,
            vec![0, 1, 2, 3, 4]
        );
        assert_eq!(
            sample_random_node(&g, 5, &mut rng(1)).unwrap().node_ids,
            vec![0, 1, 2, 3, 4]
        );
        let g = graph(6).with_edges([[0, 1], [1, 2], [3, 4]]);
        assert_eq!(
            sample_edge(&g, 3, &mut rng(1)).unwrap().node_ids,
            vec![0, 1, 2, 3, 4]
        );
    }

    #[test]
    fn budget_checks() {
        let g = graph(3).with_edges([[0, 1]]);
        assert_eq!(
            sample_node(&g, 0, &mut rng(0)),
            Err(SampleError::BudgetOutOfRange { budget: 0, max: 3 })
        );
        assert_eq!(
            sample_node(&g, 4, &mut rng(0)),
            Err(SampleError::BudgetOutOfRange { budget: 4, max: 3 })
        );
        assert_eq!(
            sample_edge(&g, 2, &mut rng(0)),
            Err(SampleError::BudgetOutOfRange { budget: 2, max: 1 })
        );
        assert_eq!(
            sample_edge(&graph(3), 1, &mut rng(0)),
            Err(SampleError::NoEdges)
        );
        assert_eq!(
            sample_random_hyperedge(&g, 1, &mut rng(0)),
            Err(SampleError::NoHyperedges)
        );
    }

    #[test]
    fn single_edge_is_always_drawn() {
        let g = graph(3).with_edges([[1, 2]]);
        for seed in 0..20 {
            assert_eq!(
                sample_edge(&g, 1, &mut rng(seed)).unwrap().node_ids,
                vec![1, 2]
            );
        }
    }

    #[test]
    fn zero_length_walk_keeps_roots() {
        let g = graph(10).with_edges([[0, 1], [1, 2]]);
        let mut r = rng(3);
        let s = sample_rw(&g, 4, 0, &mut r).unwrap();
        assert!(s.num_nodes() <= 4 && !s.node_ids.is_empty());
        assert!(s.edges.len() <= 2);
    }

    #[test]
    fn sole_neighbor_walk() {
        let g = graph(2).with_edges([[0, 1]]);
        for seed in 0..20 {
            assert_eq!(
                sample_rw(&g, 1, 1, &mut rng(seed)).unwrap().node_ids,
                vec![0, 1]
            );
        }
    }

    #[test]
    fn hyperedge_baseline_takes_members() {
        let g = graph(5).with_hyperedges(vec![vec![0, 1, 2]]);
        let s = sample_random_hyperedge(&g, 1, &mut rng(0)).unwrap();
        assert_eq!(s.node_ids, vec![0, 1, 2]);
    }

    #[test]
    fn draws_are_distinct_and_respect_zero_weights() {
        let w = [0.0, 1.0, 0.0, 3.0, 2.0];
        for seed in 0..50 {
            let d = weighted_draws(&w, 5, &mut rng(seed));
            let mut sorted = d.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
            let first_three: Vec<_> = d[..3].to_vec();
            assert!(first_three.iter().all(|&i| w[i] > 0.0), "{d:?}");
        }
    }

    #[test]
    fn determinism() {
        let g = graph(30)
            .with_edges((0..29).map(|i| [i, i + 1]))
            .with_hyperedges(vec![vec![0, 5, 9], vec![3, 4]]);
        for s in [
            Sampler::Node { budget: 7 },
            Sampler::Edge { budget_edges: 5 },
            Sampler::Rw {
                roots: 3,
                walk_length: 4,
            },
            Sampler::RandNode { budget: 9 },
            Sampler::RandHyperedge { budget: 1 },
        ] {
            assert_eq!(
                s.sample(&g, &mut rng(11)).unwrap(),
                s.sample(&g, &mut rng(11)).unwrap(),
                "{s:?}"
            );
        }
    }
}
