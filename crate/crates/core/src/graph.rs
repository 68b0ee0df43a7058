//! The hybrid-graph data model.
//!
//! A [`HybridGraph`] carries node features, undirected simple edges,
//! weighted hyperedges and a parent function. Simple graphs, hypergraphs and
//! hierarchical graphs are the special cases reported by [`HybridGraph::classify`].
//!
//! The parent function is stored as a vector where `parent[v] == v` means
//! "no parent" (top level). A flat graph therefore has the identity parent.

use crate::matrix::{Csr, Matrix};
use std::collections::{HashMap, HashSet};
use std::fmt;
use thiserror::Error;

/// Per-node targets; the variant also fixes the learning task.
#[derive(Clone, Debug, PartialEq)]
pub enum Labels {
    Classes {
        values: Vec<usize>,
        num_classes: usize,
    },
    Values(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    Classification { num_classes: usize },
    Regression,
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes { values, .. } => values.len(),
            Labels::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn task(&self) -> Task {
        match self {
            Labels::Classes { num_classes, .. } => Task::Classification {
                num_classes: *num_classes,
            },
            Labels::Values(_) => Task::Regression,
        }
    }

    /// Labels restricted to `nodes`, in the given order.
    pub fn select(&self, nodes: &[usize]) -> Labels {
        match self {
            Labels::Classes {
                values,
                num_classes,
            } => Labels::Classes {
                values: nodes.iter().map(|&v| values[v]).collect(),
                num_classes: *num_classes,
            },
            Labels::Values(v) => Labels::Values(nodes.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GraphKind {
    Simple,
    Hypergraph,
    Hierarchical,
    GeneralHybrid,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GraphKind::Simple => "simple",
            GraphKind::Hypergraph => "hypergraph",
            GraphKind::Hierarchical => "hierarchical",
            GraphKind::GeneralHybrid => "hybrid",
        };
        f.write_str(s)
    }
}

/// A broken structural invariant, with the offending index.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    HyperedgeFeatureRows {
        expected: usize,
        found: usize,
    },
    LabelCount {
        expected: usize,
        found: usize,
    },
    ClassOutOfRange {
        node: usize,
        class: usize,
        num_classes: usize,
    },
    ParentLength {
        expected: usize,
        found: usize,
    },
    ParentOutOfRange {
        node: usize,
        parent: usize,
    },
    ParentCycle {
        node: usize,
    },
    SelfLoop {
        edge: usize,
    },
    EdgeOutOfRange {
        edge: usize,
        node: usize,
    },
    DuplicateEdge {
        edge: usize,
        first: usize,
    },
    EmptyHyperedge {
        hyperedge: usize,
    },
    HyperedgeOutOfRange {
        hyperedge: usize,
        node: usize,
    },
    DuplicateMember {
        hyperedge: usize,
        node: usize,
    },
    WeightCount {
        expected: usize,
        found: usize,
    },
    NonPositiveWeight {
        hyperedge: usize,
        weight: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            HyperedgeFeatureRows { expected, found } => {
                write!(
                    f,
                    "hyperedge feature matrix has {found} rows, expected {expected}"
                )
            }
            LabelCount { expected, found } => write!(f, "{found} labels for {expected} nodes"),
            ClassOutOfRange {
                node,
                class,
                num_classes,
            } => {
                write!(
                    f,
                    "label {class} of node {node} is outside 0..{num_classes}"
                )
            }
            ParentLength { expected, found } => {
                write!(f, "parent vector has length {found}, expected {expected}")
            }
            ParentOutOfRange { node, parent } => {
                write!(f, "parent {parent} of node {node} is out of range")
            }
            ParentCycle { node } => write!(f, "parent cycle through node {node}"),
            SelfLoop { edge } => write!(f, "self-loop at edge index {edge}"),
            EdgeOutOfRange { edge, node } => {
                write!(f, "edge {edge} references node {node}, index out of range")
            }
            DuplicateEdge { edge, first } => write!(f, "edge {edge} duplicates edge {first}"),
            EmptyHyperedge { hyperedge } => write!(f, "empty hyperedge at index {hyperedge}"),
            HyperedgeOutOfRange { hyperedge, node } => {
                write!(
                    f,
                    "hyperedge {hyperedge} references node {node}, index out of range"
                )
            }
            DuplicateMember { hyperedge, node } => {
                write!(f, "hyperedge {hyperedge} lists node {node} twice")
            }
            WeightCount { expected, found } => {
                write!(f, "{found} hyperedge weights for {expected} hyperedges")
            }
            NonPositiveWeight { hyperedge, weight } => {
                write!(f, "hyperedge {hyperedge} has non-positive weight {weight}")
            }
        }
    }
}

/// Suspicious but legal structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Warning {
    DuplicateHyperedge { hyperedge: usize, first: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DuplicateHyperedge { hyperedge, first } => {
                write!(
                    f,
                    "hyperedge {hyperedge} has the same members as hyperedge {first}"
                )
            }
        }
    }
}

#[derive(Debug, Error)]
#[error("invalid hybrid graph: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InvalidGraph(pub Vec<Violation>);

/// Nodes, simple edges, weighted hyperedges and a parent function.
///
/// Fields are public for construction; every operation that needs a
/// well-formed graph checks [`HybridGraph::validate`] first.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridGraph {
    pub node_features: Matrix,
    pub hyperedge_features: Option<Matrix>,
    pub simple_edges: Vec<[usize; 2]>,
    pub hyperedges: Vec<Vec<usize>>,
    pub hyperedge_weights: Vec<f64>,
    pub parent: Vec<usize>,
    pub labels: Labels,
}

impl HybridGraph {
    /// A flat graph with no edges: identity parent, no hyperedges.
    pub fn new(node_features: Matrix, labels: Labels) -> Self {
        let n = node_features.rows();
        Self {
            node_features,
            hyperedge_features: None,
            simple_edges: Vec::new(),
            hyperedges: Vec::new(),
            hyperedge_weights: Vec::new(),
            parent: (0..n).collect(),
            labels,
        }
    }

    pub fn with_edges(mut self, edges: impl IntoIterator<Item = [usize; 2]>) -> Self {
        self.simple_edges = edges.into_iter().collect();
        self
    }

    /// Replaces the hyperedges; weights reset to 1.0.
    pub fn with_hyperedges(mut self, hyperedges: Vec<Vec<usize>>) -> Self {
        self.hyperedge_weights = vec![1.0; hyperedges.len()];
        self.hyperedges = hyperedges;
        self.hyperedge_features = None;
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.hyperedge_weights = weights;
        self
    }

    pub fn with_parent(mut self, parent: Vec<usize>) -> Self {
        self.parent = parent;
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.node_features.rows()
    }

    pub fn num_edges(&self) -> usize {
        self.simple_edges.len()
    }

    pub fn num_hyperedges(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn task(&self) -> Task {
        self.labels.task()
    }

    pub fn has_identity_parent(&self) -> bool {
        self.parent.iter().enumerate().all(|(v, &p)| v == p)
    }

    /// Sorted, deduplicated neighbor lists over the simple edges.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        adjacency_lists(self.num_nodes(), &self.simple_edges)
    }

    /// Simple-edge degree of every node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes()];
        for &[u, v] in &self.simple_edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Binary node-hyperedge incidence matrix `H` (`|V| x |HE|`).
    pub fn incidence(&self) -> Csr {
        let triplets: Vec<_> = self
            .hyperedges
            .iter()
            .enumerate()
            .flat_map(|(e, members)| members.iter().map(move |&v| (v, e, 1.0)))
            .collect();
        Csr::from_triplets(self.num_nodes(), self.num_hyperedges(), &triplets)
    }

    /// Binary adjacency matrix `A` over the simple edges.
    pub fn adjacency_matrix(&self) -> Csr {
        let triplets: Vec<_> = self
            .simple_edges
            .iter()
            .flat_map(|&[u, v]| [(u, v, 1.0), (v, u, 1.0)])
            .collect();
        Csr::from_triplets(self.num_nodes(), self.num_nodes(), &triplets)
    }

    /// Parent relation matrix `R`, with `R[u][v] = 1` iff `parent[u] == v`.
    pub fn parent_matrix(&self) -> Csr {
        let triplets: Vec<_> = self
            .parent
            .iter()
            .enumerate()
            .map(|(u, &p)| (u, p, 1.0))
            .collect();
        Csr::from_triplets(self.num_nodes(), self.num_nodes(), &triplets)
    }

    /// Diagonal of the hyperedge weight matrix `W`.
    pub fn weight_diagonal(&self) -> &[f64] {
        &self.hyperedge_weights
    }

    /// Every broken invariant. An empty list means the graph is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.num_nodes();
        let mut out = Vec::new();

        if let Some(e) = &self.hyperedge_features {
            if e.rows() != self.num_hyperedges() {
                out.push(Violation::HyperedgeFeatureRows {
                    expected: self.num_hyperedges(),
                    found: e.rows(),
                });
            }
        }
        if self.labels.len() != n {
            out.push(Violation::LabelCount {
                expected: n,
                found: self.labels.len(),
            });
        }
        if let Labels::Classes {
            values,
            num_classes,
        } = &self.labels
        {
            for (node, &class) in values.iter().enumerate() {
                if class >= *num_classes {
                    out.push(Violation::ClassOutOfRange {
                        node,
                        class,
                        num_classes: *num_classes,
                    });
                }
            }
        }

        let mut seen = HashMap::new();
        for (i, &[u, v]) in self.simple_edges.iter().enumerate() {
            let mut bad = false;
            for node in [u, v] {
                if node >= n {
                    out.push(Violation::EdgeOutOfRange { edge: i, node });
                    bad = true;
                }
            }
            if u == v {
                out.push(Violation::SelfLoop { edge: i });
                bad = true;
            }
            if !bad {
                if let Some(&first) = seen.get(&(u.min(v), u.max(v))) {
                    out.push(Violation::DuplicateEdge { edge: i, first });
                } else {
                    seen.insert((u.min(v), u.max(v)), i);
                }
            }
        }

        for (e, members) in self.hyperedges.iter().enumerate() {
            if members.is_empty() {
                out.push(Violation::EmptyHyperedge { hyperedge: e });
            }
            let mut set = HashSet::with_capacity(members.len());
            for &v in members {
                if v >= n {
                    out.push(Violation::HyperedgeOutOfRange {
                        hyperedge: e,
                        node: v,
                    });
                } else if !set.insert(v) {
                    out.push(Violation::DuplicateMember {
                        hyperedge: e,
                        node: v,
                    });
                }
            }
        }
        if self.hyperedge_weights.len() != self.num_hyperedges() {
            out.push(Violation::WeightCount {
                expected: self.num_hyperedges(),
                found: self.hyperedge_weights.len(),
            });
        }
        for (e, &w) in self.hyperedge_weights.iter().enumerate() {
            // Also rejects NaN.
            if !(w > 0.0) || !w.is_finite() {
                out.push(Violation::NonPositiveWeight {
                    hyperedge: e,
                    weight: w,
                });
            }
        }

        if self.parent.len() != n {
            out.push(Violation::ParentLength {
                expected: n,
                found: self.parent.len(),
            });
        } else {
            let mut ok = true;
            for (v, &p) in self.parent.iter().enumerate() {
                if p >= n {
                    out.push(Violation::ParentOutOfRange { node: v, parent: p });
                    ok = false;
                }
            }
            if ok {
                if let Some(node) = find_parent_cycle(&self.parent) {
                    out.push(Violation::ParentCycle { node });
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Err with every violation if the graph is invalid.
    pub fn check(&self) -> Result<(), InvalidGraph> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(InvalidGraph(v))
        }
    }

    /// Legal but suspicious structure: hyperedges with identical member sets.
    pub fn warnings(&self) -> Vec<Warning> {
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut out = Vec::new();
        for (e, members) in self.hyperedges.iter().enumerate() {
            let mut key = members.clone();
            key.sort_unstable();
            match seen.get(&key) {
                Some(&first) => out.push(Warning::DuplicateHyperedge {
                    hyperedge: e,
                    first,
                }),
                None => {
                    seen.insert(key, e);
                }
            }
        }
        out
    }

    /// Distance of each node to its top-level ancestor. Requires an acyclic
    /// parent function.
    pub fn levels(&self) -> Vec<usize> {
        let n = self.num_nodes();
        let mut depth: Vec<Option<usize>> = vec![None; n];
        for start in 0..n {
            let mut chain = Vec::new();
            let mut v = start;
            let base = loop {
                if let Some(d) = depth[v] {
                    break d;
                }
                if self.parent[v] == v {
                    depth[v] = Some(0);
                    break 0;
                }
                chain.push(v);
                v = self.parent[v];
            };
            for (i, &u) in chain.iter().rev().enumerate() {
                depth[u] = Some(base + i + 1);
            }
        }
        depth
            .into_iter()
            .map(|d| d.expect("every node resolved"))
            .collect()
    }

    /// Which special case of hybrid graph this is.
    ///
    /// Simple edges and size-2 hyperedges are treated alike. Size-1
    /// hyperedges connect nothing and do not affect the result.
    pub fn classify(&self) -> Result<GraphKind, InvalidGraph> {
        self.check()?;
        let higher_order = self.hyperedges.iter().any(|e| e.len() >= 3);
        let flat = self.has_identity_parent();
        Ok(match (higher_order, flat) {
            (false, true) => GraphKind::Simple,
            (true, true) => GraphKind::Hypergraph,
            (false, false) if self.levels_connected() => GraphKind::Hierarchical,
            _ => GraphKind::GeneralHybrid,
        })
    }

    /// Whether every node below the top level shares a pairwise edge with
    /// some node exactly one level up.
    fn levels_connected(&self) -> bool {
        let level = self.levels();
        let mut linked = vec![false; self.num_nodes()];
        let pairs = self.simple_edges.iter().copied().chain(
            self.hyperedges
                .iter()
                .filter(|e| e.len() == 2)
                .map(|e| [e[0], e[1]]),
        );
        for [u, v] in pairs {
            if level[u] == level[v] + 1 {
                linked[u] = true;
            }
            if level[v] == level[u] + 1 {
                linked[v] = true;
            }
        }
        (0..self.num_nodes()).all(|v| level[v] == 0 || linked[v])
    }

    /// Drops hyperedges larger than two and flattens the hierarchy.
    pub fn to_simple(&self) -> Result<HybridGraph, InvalidGraph> {
        self.check()?;
        let keep: Vec<usize> = (0..self.num_hyperedges())
            .filter(|&e| self.hyperedges[e].len() == 2)
            .collect();
        let mut g = self.to_hypergraph()?;
        g.hyperedges = keep.iter().map(|&e| self.hyperedges[e].clone()).collect();
        g.hyperedge_weights = keep.iter().map(|&e| self.hyperedge_weights[e]).collect();
        g.hyperedge_features = self
            .hyperedge_features
            .as_ref()
            .map(|m| m.select_rows(&keep));
        Ok(g)
    }

    /// Keeps every edge and hyperedge; flattens the hierarchy.
    pub fn to_hypergraph(&self) -> Result<HybridGraph, InvalidGraph> {
        self.check()?;
        let mut g = self.clone();
        g.parent = (0..self.num_nodes()).collect();
        Ok(g)
    }

    /// Replaces every hyperedge with a virtual node one level up.
    ///
    /// Virtual node `n + e` stands for hyperedge `e`. Each member gets a
    /// simple edge to it and takes it as parent; a node in several
    /// hyperedges takes the lowest-index one. Virtual nodes are top level,
    /// their features are the mean of their members' features, and their
    /// label is the members' majority class (lowest class on ties) or mean
    /// value. Nodes outside every hyperedge keep their parent.
    pub fn to_two_level_hierarchy(&self) -> Result<HybridGraph, InvalidGraph> {
        self.check()?;
        let n = self.num_nodes();
        let m = self.num_hyperedges();
        let d = self.node_features.cols();

        let mut features = Matrix::zeros(n + m, d);
        for v in 0..n {
            features
                .row_mut(v)
                .copy_from_slice(self.node_features.row(v));
        }
        let mut parent = self.parent.clone();
        parent.extend(n..n + m);
        let mut assigned = vec![false; n];
        let mut edges = self.simple_edges.clone();

        for (e, members) in self.hyperedges.iter().enumerate() {
            let virt = n + e;
            let scale = 1.0 / members.len() as f64;
            for &v in members {
                edges.push([v, virt]);
                if !assigned[v] {
                    assigned[v] = true;
                    parent[v] = virt;
                }
                let src = self.node_features.row(v).to_vec();
                for (o, x) in features.row_mut(virt).iter_mut().zip(src) {
                    *o += x * scale;
                }
            }
        }

        let labels = match &self.labels {
            Labels::Classes {
                values,
                num_classes,
            } => {
                let mut values = values.clone();
                for members in &self.hyperedges {
                    let mut counts = vec![0usize; *num_classes];
                    for &v in members {
                        counts[values[v]] += 1;
                    }
                    let best = (0..*num_classes)
                        .max_by_key(|&c| (counts[c], std::cmp::Reverse(c)))
                        .unwrap_or(0);
                    values.push(best);
                }
                Labels::Classes {
                    values,
                    num_classes: *num_classes,
                }
            }
            Labels::Values(v) => {
                let mut values = v.clone();
                for members in &self.hyperedges {
                    values.push(members.iter().map(|&u| v[u]).sum::<f64>() / members.len() as f64);
                }
                Labels::Values(values)
            }
        };

        Ok(HybridGraph {
            node_features: features,
            hyperedge_features: None,
            simple_edges: edges,
            hyperedges: Vec::new(),
            hyperedge_weights: Vec::new(),
            parent,
            labels,
        })
    }

    /// Relabels node `v` as `perm[v]` everywhere.
    pub fn permute_nodes(&self, perm: &[usize]) -> HybridGraph {
        let n = self.num_nodes();
        assert_eq!(perm.len(), n, "permutation length");
        let mut inverse = vec![0; n];
        for (v, &p) in perm.iter().enumerate() {
            inverse[p] = v;
        }
        HybridGraph {
            node_features: self.node_features.select_rows(&inverse),
            hyperedge_features: self.hyperedge_features.clone(),
            simple_edges: self
                .simple_edges
                .iter()
                .map(|&[u, v]| [perm[u], perm[v]])
                .collect(),
            hyperedges: self
                .hyperedges
                .iter()
                .map(|e| e.iter().map(|&v| perm[v]).collect())
                .collect(),
            hyperedge_weights: self.hyperedge_weights.clone(),
            parent: inverse.iter().map(|&old| perm[self.parent[old]]).collect(),
            labels: self.labels.select(&inverse),
        }
    }
}

/// Returns a node on a cycle of the parent function, if any. Fixed points
/// (`parent[v] == v`) are not cycles.
fn find_parent_cycle(parent: &[usize]) -> Option<usize> {
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut state = vec![0u8; parent.len()];
    for start in 0..parent.len() {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            if parent[v] == v {
                break;
            }
            v = parent[v];
        }
        if state[v] == 1 && parent[v] != v {
            return Some(v);
        }
        for u in path {
            state[u] = 2;
        }
    }
    None
}

/// Sorted, deduplicated neighbor lists.
pub fn adjacency_lists(num_nodes: usize, edges: &[[usize; 2]]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); num_nodes];
    for &[u, v] in edges {
        if u != v {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Sorts members of each hyperedge and the list itself.
pub fn canonicalize(mut hyperedges: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for e in &mut hyperedges {
        e.sort_unstable();
    }
    hyperedges.sort();
    hyperedges
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize) -> HybridGraph {
        HybridGraph::new(
            Matrix::zeros(n, 1),
            Labels::Classes {
                values: vec![0; n],
                num_classes: 2,
            },
        )
    }

    #[test]
    fn triangle_is_valid() {
        let g = graph(3).with_edges([[0, 1], [1, 2], [2, 0]]);
        assert!(g.validate().is_empty());
        assert_eq!(g.classify().unwrap(), GraphKind::Simple);
    }

    #[test]
    fn empty_hyperedge_is_reported() {
        let g = graph(3).with_hyperedges(vec![vec![0, 1], vec![]]);
        let v = g.validate();
        assert_eq!(v, vec![Violation::EmptyHyperedge { hyperedge: 1 }]);
        assert_eq!(v[0].to_string(), "empty hyperedge at index 1");
    }

    #[test]
    fn parent_two_cycle_is_reported() {
        let g = graph(2).with_parent(vec![1, 0]);
        let v = g.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::ParentCycle { .. }));
        assert!(v[0].to_string().starts_with("parent cycle"));
    }

    #[test]
    fn longer_parent_cycle_behind_a_tail() {
        let g = graph(4).with_parent(vec![1, 2, 3, 1]);
        assert!(matches!(g.validate()[..], [Violation::ParentCycle { .. }]));
    }

    #[test]
    fn edge_problems() {
        let g = graph(3).with_edges([[0, 0], [0, 1], [1, 0], [2, 5]]);
        let v = g.validate();
        assert!(v.contains(&Violation::SelfLoop { edge: 0 }));
        assert!(v.contains(&Violation::DuplicateEdge { edge: 2, first: 1 }));
        assert!(v.contains(&Violation::EdgeOutOfRange { edge: 3, node: 5 }));
    }

    #[test]
    fn weight_and_member_problems() {
        let g = graph(3)
            .with_hyperedges(vec![vec![0, 0, 1], vec![1, 2]])
            .with_weights(vec![1.0, -2.0]);
        let v = g.validate();
        assert!(v.contains(&Violation::DuplicateMember {
            hyperedge: 0,
            node: 0
        }));
        assert!(v.contains(&Violation::NonPositiveWeight {
            hyperedge: 1,
            weight: -2.0
        }));
    }

    #[test]
    fn duplicate_hyperedges_warn_but_validate() {
        let g = graph(3).with_hyperedges(vec![vec![0, 1, 2], vec![2, 1, 0]]);
        assert!(g.validate().is_empty());
        assert_eq!(
            g.warnings(),
            vec![Warning::DuplicateHyperedge {
                hyperedge: 1,
                first: 0
            }]
        );
    }

    #[test]
    fn classification_cases() {
        let simple = graph(3).with_edges([[0, 1], [1, 2]]);
        assert_eq!(simple.classify().unwrap(), GraphKind::Simple);

        let hyper = graph(3).with_hyperedges(vec![vec![0, 1, 2]]);
        assert_eq!(hyper.classify().unwrap(), GraphKind::Hypergraph);

        let hier = graph(3)
            .with_edges([[0, 2], [1, 2]])
            .with_parent(vec![2, 2, 2]);
        assert_eq!(hier.classify().unwrap(), GraphKind::Hierarchical);

        // Node 1 has a parent but no edge to the level above.
        let broken = graph(3).with_edges([[0, 2]]).with_parent(vec![2, 2, 2]);
        assert_eq!(broken.classify().unwrap(), GraphKind::GeneralHybrid);

        let both = graph(4)
            .with_edges([[0, 3], [1, 3], [2, 3]])
            .with_hyperedges(vec![vec![0, 1, 2]])
            .with_parent(vec![3, 3, 3, 3]);
        assert_eq!(both.classify().unwrap(), GraphKind::GeneralHybrid);
    }

    #[test]
    fn size_two_hyperedge_counts_as_parent_link() {
        let g = graph(2)
            .with_hyperedges(vec![vec![0, 1]])
            .with_parent(vec![1, 1]);
        assert_eq!(g.classify().unwrap(), GraphKind::Hierarchical);
    }

    #[test]
    fn classify_rejects_invalid() {
        assert!(graph(2).with_parent(vec![1, 0]).classify().is_err());
    }

    #[test]
    fn to_simple_drops_hyperedges() {
        let g = graph(3)
            .with_edges([[0, 1]])
            .with_hyperedges(vec![vec![0, 1, 2]]);
        let s = g.to_simple().unwrap();
        assert_eq!(s.simple_edges, vec![[0, 1]]);
        assert!(s.hyperedges.is_empty());
        assert!(s.hyperedge_weights.is_empty());
        assert_eq!(s.classify().unwrap(), GraphKind::Simple);
    }

    #[test]
    fn to_simple_is_identity_on_simple_graphs() {
        let g = graph(4)
            .with_edges([[0, 1], [2, 3]])
            .with_hyperedges(vec![vec![1, 2]]);
        assert_eq!(g.to_simple().unwrap(), g);
    }

    #[test]
    fn two_level_hierarchy_of_a_triangle_hyperedge() {
        let g = graph(3).with_hyperedges(vec![vec![0, 1, 2]]);
        let h = g.to_two_level_hierarchy().unwrap();
        assert_eq!(h.num_nodes(), 4);
        assert_eq!(h.parent, vec![3, 3, 3, 3]);
        assert_eq!(h.simple_edges, vec![[0, 3], [1, 3], [2, 3]]);
        assert!(h.hyperedges.is_empty());
        assert!(h.validate().is_empty());
        assert_eq!(h.classify().unwrap(), GraphKind::Hierarchical);
    }

    #[test]
    fn hierarchy_ties_go_to_lowest_hyperedge() {
        let g = graph(4).with_hyperedges(vec![vec![1, 2, 3], vec![0, 1]]);
        let h = g.to_two_level_hierarchy().unwrap();
        assert_eq!(h.parent, vec![5, 4, 4, 4, 4, 5]);
    }

    #[test]
    fn hierarchy_virtual_features_and_labels() {
        let mut g = HybridGraph::new(
            Matrix::from_rows(&[[1.0], [3.0], [8.0]]),
            Labels::Classes {
                values: vec![1, 1, 0],
                num_classes: 2,
            },
        )
        .with_hyperedges(vec![vec![0, 1, 2]]);
        let h = g.to_two_level_hierarchy().unwrap();
        assert_eq!(h.node_features.row(3), &[4.0]);
        assert_eq!(
            h.labels,
            Labels::Classes {
                values: vec![1, 1, 0, 1],
                num_classes: 2
            }
        );

        g.labels = Labels::Values(vec![1.0, 2.0, 6.0]);
        let h = g.to_two_level_hierarchy().unwrap();
        assert_eq!(h.labels, Labels::Values(vec![1.0, 2.0, 6.0, 3.0]));
    }

    #[test]
    fn matrix_forms() {
        let g = graph(3)
            .with_edges([[0, 1]])
            .with_hyperedges(vec![vec![0, 1, 2]])
            .with_parent(vec![2, 2, 2]);
        assert_eq!(
            g.incidence().to_dense(),
            Matrix::from_rows(&[[1.0], [1.0], [1.0]])
        );
        assert_eq!(
            g.adjacency_matrix().to_dense(),
            Matrix::from_rows(&[[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        );
        assert_eq!(
            g.parent_matrix().to_dense(),
            Matrix::from_rows(&[[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
        );
        assert_eq!(g.weight_diagonal(), &[1.0]);
    }

    #[test]
    fn levels_follow_parent_chains() {
        let g = graph(4).with_parent(vec![1, 2, 2, 3]);
        assert_eq!(g.levels(), vec![2, 1, 0, 0]);
    }
}
