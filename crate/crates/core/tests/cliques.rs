mod common;

use common::random_edges;
use hgb::construct::{cliques_to_hyperedges, degeneracy_order, maximal_cliques};
use hgb::graph::adjacency_lists;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every vertex subset, kept when it is a clique that no outside vertex extends.
fn exhaustive_maximal_cliques(n: usize, edges: &[[usize; 2]], min_size: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![vec![false; n]; n];
    for &[u, v] in edges {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        let is_clique = members
            .iter()
            .all(|&a| members.iter().all(|&b| a == b || adj[a][b]));
        if !is_clique || members.len() < min_size {
            continue;
        }
        let extendable = (0..n).any(|w| mask >> w & 1 == 0 && members.iter().all(|&m| adj[m][w]));
        if !extendable {
            out.push(members);
        }
    }
    out.sort();
    out
}

#[test]
fn bron_kerbosch_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..200 {
        let n = rng.gen_range(1..=12);
        let p = (i % 11) as f64 / 10.0;
        let edges = random_edges(n, p, &mut rng);
        let adj = adjacency_lists(n, &edges);
        for min_size in [1, 3] {
            assert_eq!(
                maximal_cliques(&adj, min_size),
                exhaustive_maximal_cliques(n, &edges, min_size),
                "graph {i}: n={n} p={p} min_size={min_size} edges={edges:?}"
            );
        }
    }
}

#[test]
fn hyperedge_builder_uses_min_size_three() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = rng.gen_range(3..=12);
        let edges = random_edges(n, 0.5, &mut rng);
        assert_eq!(
            cliques_to_hyperedges(&edges, n, 3),
            exhaustive_maximal_cliques(n, &edges, 3)
        );
    }
}

#[test]
fn degeneracy_order_is_a_permutation_with_bounded_back_degree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.gen_range(1..40);
        let adj = adjacency_lists(n, &random_edges(n, 0.3, &mut rng));
        let order = degeneracy_order(&adj);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        // Each vertex has at most `k` later neighbors, `k` the degeneracy; the
        // degeneracy never exceeds the maximum degree.
        let mut pos = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let later = |v: usize| adj[v].iter().filter(|&&u| pos[u] > pos[v]).count();
        let k = (0..n).map(later).max().unwrap_or(0);
        assert!(k <= adj.iter().map(Vec::len).max().unwrap_or(0));
    }
}
