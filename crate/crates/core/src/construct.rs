//! Hyperedge builders.
//!
//! * [`cliques_to_hyperedges`]: maximal cliques of the simple graph.
//! * [`interval_hyperedges`]: genomic elements within a base-pair window.
//! * [`ball_hyperedges`]: nodes within an embedding-distance ball.
//!
//! All builders return hyperedges in canonical order: members sorted
//! ascending, the list sorted lexicographically.

use crate::graph::{adjacency_lists, canonicalize};
use crate::io::Position;
use crate::matrix::Matrix;
use rayon::prelude::*;
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// Default window for [`interval_hyperedges`], in base pairs.
pub const DEFAULT_INTERVAL_BP: u64 = 200_000;

#[derive(Debug, Error, PartialEq)]
pub enum ConstructError {
    #[error("embedding value at row {row}, column {col} is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("distance threshold must be positive, got {0}")]
    BadThreshold(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    /// `1 - cos(x, y)`; a zero vector is at distance 1 from everything.
    Cosine,
}

/// Nodes ordered by repeatedly removing a vertex of minimum remaining degree.
pub fn degeneracy_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_deg + 1];
    for v in 0..n {
        buckets[degree[v]].push(v);
    }
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut d = 0;
    while order.len() < n {
        d = d.min(max_deg);
        while buckets[d].is_empty() {
            d += 1;
        }
        let v = buckets[d].pop().expect("non-empty bucket");
        // Stale entries: a vertex may sit in several buckets.
        if removed[v] || degree[v] != d {
            continue;
        }
        removed[v] = true;
        order.push(v);
        for &u in &adj[v] {
            if !removed[u] {
                degree[u] -= 1;
                buckets[degree[u]].push(u);
                d = d.min(degree[u]);
            }
        }
    }
    order
}

type Bits = Vec<u64>;

fn bits_iter(b: &[u64]) -> impl Iterator<Item = usize> + '_ {
    b.iter().enumerate().flat_map(|(w, &word)| {
        let mut word = word;
        std::iter::from_fn(move || {
            if word == 0 {
                return None;
            }
            let t = word.trailing_zeros() as usize;
            word &= word - 1;
            Some(w * 64 + t)
        })
    })
}

fn bits_count(b: &[u64]) -> usize {
    b.iter().map(|w| w.count_ones() as usize).sum()
}

fn bits_and(a: &[u64], b: &[u64]) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn bits_and_count(a: &[u64], b: &[u64]) -> usize {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x & y).count_ones() as usize)
        .sum()
}

fn bits_is_empty(b: &[u64]) -> bool {
    b.iter().all(|&w| w == 0)
}

/// Bron–Kerbosch with pivoting inside one vertex's neighborhood, on
/// neighborhood-local bitsets.
struct LocalSearch<'a> {
    adj: &'a [Bits],
    min_size: usize,
    out: Vec<Vec<usize>>,
}

impl LocalSearch<'_> {
    fn expand(&mut self, r: &mut Vec<usize>, mut p: Bits, mut x: Bits) {
        if bits_is_empty(&p) {
            if bits_is_empty(&x) && r.len() + 1 >= self.min_size {
                self.out.push(r.clone());
            }
            return;
        }
        // +1 for the anchor vertex that owns this neighborhood.
        if r.len() + 1 + bits_count(&p) < self.min_size {
            return;
        }
        let pivot = bits_iter(&p)
            .chain(bits_iter(&x))
            .max_by_key(|&u| bits_and_count(&p, &self.adj[u]))
            .expect("p is non-empty");
        let candidates: Vec<usize> = bits_iter(&p)
            .filter(|&w| self.adj[pivot][w / 64] >> (w % 64) & 1 == 0)
            .collect();
        for w in candidates {
            r.push(w);
            self.expand(r, bits_and(&p, &self.adj[w]), bits_and(&x, &self.adj[w]));
            r.pop();
            p[w / 64] &= !(1 << (w % 64));
            x[w / 64] |= 1 << (w % 64);
        }
    }
}

/// Every maximal clique of `adj` with at least `min_size` members.
///
/// Outer level follows a degeneracy ordering: each vertex `v` searches
/// only the cliques whose earliest member (in that order) is `v`. The
/// inner level is pivoting Bron–Kerbosch. Outer vertices run in parallel
/// and the result is canonicalized, so output never depends on scheduling.
pub fn maximal_cliques(adj: &[Vec<usize>], min_size: usize) -> Vec<Vec<usize>> {
    let order = degeneracy_order(adj);
    let mut position = vec![0; adj.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }

    let found: Vec<Vec<Vec<usize>>> = order
        .par_iter()
        .map_init(
            || vec![usize::MAX; adj.len()],
            |local_index, &v| {
                let nbrs = &adj[v];
                if nbrs.len() + 1 < min_size {
                    return Vec::new();
                }
                for (i, &u) in nbrs.iter().enumerate() {
                    local_index[u] = i;
                }
                let words = nbrs.len().div_ceil(64);
                let mut local_adj = vec![vec![0u64; words]; nbrs.len()];
                for (i, &u) in nbrs.iter().enumerate() {
                    for &w in &adj[u] {
                        let j = local_index[w];
                        if j != usize::MAX {
                            local_adj[i][j / 64] |= 1 << (j % 64);
                        }
                    }
                }
                let mut p = vec![0u64; words];
                let mut x = vec![0u64; words];
                for (i, &u) in nbrs.iter().enumerate() {
                    if position[u] > position[v] {
                        p[i / 64] |= 1 << (i % 64);
                    } else {
                        x[i / 64] |= 1 << (i % 64);
                    }
                }
                let mut search = LocalSearch {
                    adj: &local_adj,
                    min_size,
                    out: Vec::new(),
                };
                search.expand(&mut Vec::new(), p, x);
                for &u in nbrs {
                    local_index[u] = usize::MAX;
                }
                search
                    .out
                    .into_iter()
                    .map(|local| {
                        let mut clique: Vec<usize> = local.into_iter().map(|i| nbrs[i]).collect();
                        clique.push(v);
                        clique
                    })
                    .collect()
            },
        )
        .collect();
    canonicalize(found.into_iter().flatten().collect())
}

/// Maximal cliques of the simple graph with at least `min_size` nodes.
pub fn cliques_to_hyperedges(
    edges: &[[usize; 2]],
    num_nodes: usize,
    min_size: usize,
) -> Vec<Vec<usize>> {
    maximal_cliques(&adjacency_lists(num_nodes, edges), min_size)
}

/// One hyperedge per anchor node holding every node on the anchor's
/// chromosome whose offset lies within `threshold_bp` of the anchor's.
/// Identical member sets are kept once; singletons are kept.
pub fn interval_hyperedges(positions: &[Position], threshold_bp: u64) -> Vec<Vec<usize>> {
    let mut by_chrom: HashMap<&str, Vec<usize>> = HashMap::new();
    for (v, p) in positions.iter().enumerate() {
        by_chrom.entry(p.chromosome()).or_default().push(v);
    }
    let mut unique = BTreeSet::new();
    for nodes in by_chrom.values_mut() {
        nodes.sort_by_key(|&v| (positions[v].offset(), v));
        let offsets: Vec<u64> = nodes.iter().map(|&v| positions[v].offset()).collect();
        let (mut lo, mut hi) = (0, 0);
        for i in 0..nodes.len() {
            let anchor = offsets[i];
            while anchor - offsets[lo] > threshold_bp {
                lo += 1;
            }
            while hi + 1 < nodes.len() && offsets[hi + 1] - anchor <= threshold_bp {
                hi += 1;
            }
            let mut members = nodes[lo..=hi].to_vec();
            members.sort_unstable();
            unique.insert(members);
        }
    }
    unique.into_iter().collect()
}

fn distance(metric: Metric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        Metric::Euclidean => a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt(),
        Metric::Cosine => {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                1.0 - dot / (na * nb)
            }
        }
    }
}

/// One hyperedge per node `v`: every node within distance `tau` of `v`'s
/// embedding, `v` included. No deduplication, so the count equals the node
/// count.
pub fn ball_hyperedges(
    embeddings: &Matrix,
    tau: f64,
    metric: Metric,
) -> Result<Vec<Vec<usize>>, ConstructError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(ConstructError::BadThreshold(tau));
    }
    for (row, r) in embeddings.iter_rows().enumerate() {
        if let Some(col) = r.iter().position(|x| !x.is_finite()) {
            return Err(ConstructError::NonFinite { row, col });
        }
    }
    let n = embeddings.rows();
    let balls: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let x = embeddings.row(v);
            (0..n)
                .filter(|&u| u == v || distance(metric, x, embeddings.row(u)) <= tau)
                .collect()
        })
        .collect();
    Ok(canonicalize(balls))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pos(chrom: &str, offset: u64) -> Position {
        Position(chrom.to_owned(), offset)
    }

    #[test]
    fn k4_is_one_clique() {
        let edges = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
        assert_eq!(cliques_to_hyperedges(&edges, 4, 3), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn path_has_no_large_cliques() {
        assert!(cliques_to_hyperedges(&[[0, 1], [1, 2]], 3, 3).is_empty());
        assert_eq!(
            cliques_to_hyperedges(&[[0, 1], [1, 2]], 3, 2),
            vec![vec![0, 1], vec![1, 2]]
        );
    }

    #[test]
    fn triangle_with_pendant() {
        let edges = [[0, 1], [1, 2], [2, 0], [2, 3]];
        assert_eq!(cliques_to_hyperedges(&edges, 4, 3), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn isolated_vertices_are_singleton_cliques() {
        assert_eq!(
            cliques_to_hyperedges(&[[0, 1]], 3, 1),
            vec![vec![0, 1], vec![2]]
        );
    }

    #[test]
    fn wide_neighborhood_crosses_word_boundary() {
        // Hub joined to a 70-clique: one clique of 71 members.
        let mut edges = Vec::new();
        for i in 0..71 {
            for j in (i + 1)..71 {
                edges.push([i, j]);
            }
        }
        let cliques = cliques_to_hyperedges(&edges, 71, 3);
        assert_eq!(cliques, vec![(0..71).collect::<Vec<_>>()]);
    }

    #[test]
    fn degeneracy_order_is_a_permutation() {
        let adj = adjacency_lists(5, &[[0, 1], [1, 2], [2, 0], [3, 4]]);
        let mut order = degeneracy_order(&adj);
        order.sort_unstable();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn interval_rule() {
        let p = [pos("1", 0), pos("1", 150_000), pos("1", 400_000)];
        assert_eq!(
            interval_hyperedges(&p, DEFAULT_INTERVAL_BP),
            vec![vec![0, 1], vec![2]]
        );
    }

    #[test]
    fn interval_never_crosses_chromosomes() {
        let p = [pos("1", 0), pos("2", 0)];
        assert_eq!(
            interval_hyperedges(&p, DEFAULT_INTERVAL_BP),
            vec![vec![0], vec![1]]
        );
        assert_eq!(
            interval_hyperedges(&[pos("X", 5)], DEFAULT_INTERVAL_BP),
            vec![vec![0]]
        );
    }

    #[test]
    fn interval_window_is_inclusive() {
        let p = [pos("1", 0), pos("1", 200_000), pos("1", 400_000)];
        assert_eq!(
            interval_hyperedges(&p, 200_000),
            vec![vec![0, 1], vec![0, 1, 2], vec![1, 2]]
        );
        let p = [pos("1", 0), pos("1", 200_000), pos("1", 400_001)];
        assert_eq!(interval_hyperedges(&p, 200_000), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn ball_rule() {
        let e = Matrix::from_rows(&[[0.0], [1.0], [10.0]]);
        assert_eq!(
            ball_hyperedges(&e, 2.0, Metric::Euclidean).unwrap(),
            vec![vec![0, 1], vec![0, 1], vec![2]]
        );
        let tiny = ball_hyperedges(&e, 0.5, Metric::Euclidean).unwrap();
        assert_eq!(tiny, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn ball_cosine() {
        let e = Matrix::from_rows(&[[1.0, 0.0], [2.0, 0.1], [0.0, 1.0]]);
        assert_eq!(
            ball_hyperedges(&e, 0.01, Metric::Cosine).unwrap(),
            vec![vec![0, 1], vec![0, 1], vec![2]]
        );
    }

    #[test]
    fn ball_errors() {
        let e = Matrix::from_rows(&[[0.0], [f64::NAN]]);
        assert_eq!(
            ball_hyperedges(&e, 1.0, Metric::Euclidean),
            Err(ConstructError::NonFinite { row: 1, col: 0 })
        );
        let ok = Matrix::from_rows(&[[0.0]]);
        assert_eq!(
            ball_hyperedges(&ok, 0.0, Metric::Euclidean),
            Err(ConstructError::BadThreshold(0.0))
        );
    }
}
