//! Propagation operators derived once per graph and shared by every layer.

use crate::graph::{adjacency_lists, HybridGraph};
use crate::matrix::Csr;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct GraphContext {
    pub(crate) num_nodes: usize,
    pub(crate) num_hyperedges: usize,
    /// `D̂^{-1/2} (A + I) D̂^{-1/2}`.
    pub(crate) gcn: Arc<Csr>,
    /// Row-normalized adjacency; isolated nodes get an empty row.
    pub(crate) neighbor_mean: Arc<Csr>,
    /// Attention edges `u -> v` for `u ∈ N(v) ∪ {v}`, grouped by target.
    pub(crate) att_src: Arc<Vec<usize>>,
    pub(crate) att_dst: Arc<Vec<usize>>,
    /// `D_e^{-1} Hᵀ`, hyperedges by nodes.
    pub(crate) node_to_edge: Arc<Csr>,
    /// `D_v^{-1} H W`, nodes by hyperedges.
    pub(crate) edge_to_node: Arc<Csr>,
    /// Binary `Hᵀ`.
    pub(crate) incidence_t: Arc<Csr>,
    /// Incidence pairs sorted by node, then hyperedge.
    pub(crate) inc_node: Arc<Vec<usize>>,
    pub(crate) inc_edge: Arc<Vec<usize>>,
    /// Per pair: `1 / |e|`.
    pub(crate) inc_edge_scale: Arc<Vec<f64>>,
    /// Per pair: `w(e) / D_v`.
    pub(crate) inc_node_scale: Arc<Vec<f64>>,
}

impl GraphContext {
    pub fn new(
        num_nodes: usize,
        edges: &[[usize; 2]],
        hyperedges: &[Vec<usize>],
        weights: &[f64],
    ) -> Self {
        let n = num_nodes;
        let adj = adjacency_lists(n, edges);

        let deg: Vec<f64> = adj.iter().map(|a| (a.len() + 1) as f64).collect();
        let mut gcn = Vec::with_capacity(n + 2 * edges.len());
        let mut mean = Vec::with_capacity(2 * edges.len());
        let mut att_src = Vec::with_capacity(n + 2 * edges.len());
        let mut att_dst = Vec::with_capacity(n + 2 * edges.len());
        for (v, nbrs) in adj.iter().enumerate() {
            gcn.push((v, v, 1.0 / deg[v]));
            att_src.push(v);
            att_dst.push(v);
            for &u in nbrs {
                gcn.push((v, u, 1.0 / (deg[v] * deg[u]).sqrt()));
                mean.push((v, u, 1.0 / nbrs.len() as f64));
                att_src.push(u);
                att_dst.push(v);
            }
        }

        let m = hyperedges.len();
        let mut node_weight = vec![0.0; n];
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (e, members) in hyperedges.iter().enumerate() {
            for &v in members {
                node_weight[v] += weights[e];
                pairs.push((v, e));
            }
        }
        pairs.sort_unstable();
        let mut to_edge = Vec::with_capacity(pairs.len());
        let mut to_node = Vec::with_capacity(pairs.len());
        let mut inc_t = Vec::with_capacity(pairs.len());
        let mut edge_scale = Vec::with_capacity(pairs.len());
        let mut node_scale = Vec::with_capacity(pairs.len());
        for &(v, e) in &pairs {
            let size = hyperedges[e].len() as f64;
            // A node whose weights sum to zero gets a zero row.
            let nw = if node_weight[v] != 0.0 {
                weights[e] / node_weight[v]
            } else {
                0.0
            };
            to_edge.push((e, v, 1.0 / size));
            to_node.push((v, e, nw));
            inc_t.push((e, v, 1.0));
            edge_scale.push(1.0 / size);
            node_scale.push(nw);
        }

        GraphContext {
            num_nodes: n,
            num_hyperedges: m,
            gcn: Arc::new(Csr::from_triplets(n, n, &gcn)),
            neighbor_mean: Arc::new(Csr::from_triplets(n, n, &mean)),
            att_src: Arc::new(att_src),
            att_dst: Arc::new(att_dst),
            node_to_edge: Arc::new(Csr::from_triplets(m, n, &to_edge)),
            edge_to_node: Arc::new(Csr::from_triplets(n, m, &to_node)),
            incidence_t: Arc::new(Csr::from_triplets(m, n, &inc_t)),
            inc_node: Arc::new(pairs.iter().map(|p| p.0).collect()),
            inc_edge: Arc::new(pairs.iter().map(|p| p.1).collect()),
            inc_edge_scale: Arc::new(edge_scale),
            inc_node_scale: Arc::new(node_scale),
        }
    }

    pub fn from_graph(g: &HybridGraph) -> Self {
        Self::new(
            g.num_nodes(),
            &g.simple_edges,
            &g.hyperedges,
            &g.hyperedge_weights,
        )
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_hyperedges(&self) -> usize {
        self.num_hyperedges
    }
}
