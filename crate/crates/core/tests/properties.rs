use hgb::construct::{ball_hyperedges, cliques_to_hyperedges, interval_hyperedges, Metric};
use hgb::graph::{adjacency_lists, GraphKind, HybridGraph, Labels};
use hgb::io::{from_json_str, split, split_sizes, to_json_string, Dataset, Position};
use hgb::matrix::Matrix;
use hgb::sample::{induce, Sampler};
use hgb::stats::{compute_stats, compute_stats_counting, EdgeCounting};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Valid hybrid graphs: deduplicated edges, distinct-member hyperedges,
/// positive weights and a parent forest (every parent has a lower index).
fn hybrid_graph() -> impl Strategy<Value = HybridGraph> {
    (1usize..14).prop_flat_map(|n| {
        let edges = prop::collection::vec((0..n, 0..n), 0..3 * n);
        let hyperedges =
            prop::collection::vec(prop::collection::btree_set(0..n, 1..=n.min(5)), 0..n + 2);
        let parent =
            prop::collection::vec(prop::option::weighted(0.3, any::<prop::sample::Index>()), n);
        let features = prop::collection::vec(-10.0f64..10.0, n * 2);
        let labels = prop::collection::vec(0usize..3, n);
        (
            Just(n),
            edges,
            hyperedges,
            parent,
            features,
            labels,
            any::<bool>(),
        )
            .prop_map(
                |(n, edges, hyperedges, parent, features, labels, regression)| {
                    let mut pairs = BTreeSet::new();
                    for (u, v) in edges {
                        if u != v {
                            pairs.insert([u.min(v), u.max(v)]);
                        }
                    }
                    let hyperedges: Vec<Vec<usize>> = hyperedges
                        .into_iter()
                        .map(|s| s.into_iter().collect())
                        .collect();
                    let weights = (0..hyperedges.len()).map(|i| 0.5 + i as f64).collect();
                    let parent = parent
                        .into_iter()
                        .enumerate()
                        .map(|(v, p)| match p {
                            Some(ix) if v > 0 => ix.index(v),
                            _ => v,
                        })
                        .collect();
                    let labels = if regression {
                        Labels::Values(labels.iter().map(|&l| l as f64 * 0.25 - 0.1).collect())
                    } else {
                        Labels::Classes {
                            values: labels,
                            num_classes: 3,
                        }
                    };
                    HybridGraph::new(Matrix::from_vec(n, 2, features), labels)
                        .with_edges(pairs)
                        .with_hyperedges(hyperedges)
                        .with_weights(weights)
                        .with_parent(parent)
                },
            )
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

proptest! {
    #[test]
    fn generated_graphs_are_valid(g in hybrid_graph()) {
        prop_assert!(g.validate().is_empty(), "{:?}", g.validate());
    }

    #[test]
    fn to_simple_is_simple(g in hybrid_graph()) {
        prop_assert_eq!(g.to_simple().unwrap().classify().unwrap(), GraphKind::Simple);
    }

    #[test]
    fn to_hypergraph_is_flat(g in hybrid_graph()) {
        let kind = g.to_hypergraph().unwrap().classify().unwrap();
        prop_assert!(matches!(kind, GraphKind::Simple | GraphKind::Hypergraph));
    }

    #[test]
    fn two_level_hierarchy_is_valid(g in hybrid_graph()) {
        let h = g.to_two_level_hierarchy().unwrap();
        prop_assert!(h.validate().is_empty());
        prop_assert_eq!(h.num_nodes(), g.num_nodes() + g.num_hyperedges());
    }

    #[test]
    fn relabeling_preserves_validity_and_kind(
        (g, perm) in hybrid_graph().prop_flat_map(|g| { let n = g.num_nodes(); (Just(g), permutation(n)) })
    ) {
        let p = g.permute_nodes(&perm);
        prop_assert!(p.validate().is_empty());
        prop_assert_eq!(p.classify().unwrap(), g.classify().unwrap());
        let (a, b) = (compute_stats(&g), compute_stats(&p));
        prop_assert!((a.avg_clustering_coef - b.avg_clustering_coef).abs() < 1e-12);
        prop_assert_eq!(a.avg_node_degree, b.avg_node_degree);
    }

    #[test]
    fn json_round_trip(g in hybrid_graph()) {
        let d = Dataset::new("prop", g);
        let back = from_json_str(&to_json_string(&d)).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn split_is_a_partition(n in 5usize..400, seed in any::<u64>()) {
        let s = split(n, seed).unwrap();
        let (a, b, c) = split_sizes(n);
        prop_assert_eq!((s.train.len(), s.val.len(), s.test.len()), (a, b, c));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn degree_identity(g in hybrid_graph()) {
        for counting in [EdgeCounting::Undirected, EdgeCounting::BothDirections] {
            let s = compute_stats_counting(&g, counting);
            prop_assert!((s.avg_node_degree - 2.0 * s.num_edges as f64 / s.num_nodes as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn masking_invariants(
        (g, nodes) in hybrid_graph().prop_flat_map(|g| {
            let n = g.num_nodes();
            (Just(g), prop::collection::btree_set(0..n, 1..=n))
        })
    ) {
        let nodes: Vec<usize> = nodes.into_iter().collect();
        let sub = induce(&g, &nodes).unwrap();
        prop_assert_eq!(&sub.node_ids, &nodes);
        let sampled: BTreeSet<usize> = nodes.iter().copied().collect();
        for (members, &orig) in sub.hyperedges.iter().zip(&sub.hyperedge_ids) {
            let global: BTreeSet<usize> = members.iter().map(|&l| sub.node_ids[l]).collect();
            let expect: BTreeSet<usize> = g.hyperedges[orig].iter().copied().filter(|v| sampled.contains(v)).collect();
            prop_assert!(!global.is_empty());
            prop_assert_eq!(global, expect);
        }
        let kept: BTreeSet<usize> = sub.hyperedge_ids.iter().copied().collect();
        for (e, members) in g.hyperedges.iter().enumerate() {
            prop_assert_eq!(kept.contains(&e), members.iter().any(|v| sampled.contains(v)));
        }
        let want: BTreeSet<[usize; 2]> =
            g.simple_edges.iter().copied().filter(|[u, v]| sampled.contains(u) && sampled.contains(v)).collect();
        let got: BTreeSet<[usize; 2]> = sub.edges.iter().map(|&[a, b]| [sub.node_ids[a], sub.node_ids[b]]).collect();
        prop_assert_eq!(got, want);
        prop_assert!(sub.to_graph().validate().is_empty());
    }

    #[test]
    fn full_induction_is_identity(g in hybrid_graph()) {
        let all: Vec<usize> = (0..g.num_nodes()).collect();
        prop_assert_eq!(induce(&g, &all).unwrap().to_graph(), g);
    }

    #[test]
    fn samplers_are_deterministic_and_well_formed(g in hybrid_graph(), seed in any::<u64>()) {
        let n = g.num_nodes();
        let mut samplers = vec![
            Sampler::Node { budget: 1 + n / 2 },
            Sampler::Rw { roots: 2, walk_length: 2 },
            Sampler::RandNode { budget: n },
        ];
        if g.num_edges() > 0 {
            samplers.push(Sampler::Edge { budget_edges: 1 });
        }
        if g.num_hyperedges() > 0 {
            samplers.push(Sampler::RandHyperedge { budget: 1 });
        }
        for s in samplers {
            let a = s.sample(&g, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let b = s.sample(&g, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.to_graph().validate().is_empty());
            prop_assert_eq!(a, induce(&g, &b.node_ids).unwrap());
        }
    }

    #[test]
    fn clique_hyperedges_are_maximal_cliques(n in 1usize..20, edges in prop::collection::vec((0usize..20, 0usize..20), 0..80)) {
        let edges: Vec<[usize; 2]> = edges
            .into_iter()
            .filter(|&(u, v)| u < n && v < n && u != v)
            .map(|(u, v)| [u.min(v), u.max(v)])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let adj = adjacency_lists(n, &edges);
        let cliques = cliques_to_hyperedges(&edges, n, 3);
        for c in &cliques {
            prop_assert!(c.len() >= 3);
            for (i, &a) in c.iter().enumerate() {
                for &b in &c[i + 1..] {
                    prop_assert!(adj[a].binary_search(&b).is_ok());
                }
            }
            for d in &cliques {
                prop_assert!(c == d || !c.iter().all(|v| d.contains(v)));
            }
        }
    }

    #[test]
    fn ball_hyperedges_contain_their_center(points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..30), tau in 0.0f64..4.0) {
        let n = points.len();
        let m = Matrix::from_rows(&points);
        for metric in [Metric::Euclidean, Metric::Cosine] {
            let he = ball_hyperedges(&m, tau, metric).unwrap();
            prop_assert_eq!(he.len(), n);
            // Canonical order sorts the balls, so look for each center somewhere.
            for v in 0..n {
                prop_assert!(he.iter().any(|e| e.contains(&v)));
            }
        }
    }

    #[test]
    fn interval_hyperedges_span_at_most_twice_the_window(
        positions in prop::collection::vec((0u8..3, 0u64..2_000_000), 1..60),
        threshold in 1u64..500_000,
    ) {
        let pos: Vec<Position> = positions.iter().map(|&(c, o)| Position(c.to_string(), o)).collect();
        for e in interval_hyperedges(&pos, threshold) {
            let chrom = pos[e[0]].chromosome();
            prop_assert!(e.iter().all(|&v| pos[v].chromosome() == chrom));
            let lo = e.iter().map(|&v| pos[v].offset()).min().unwrap();
            let hi = e.iter().map(|&v| pos[v].offset()).max().unwrap();
            prop_assert!(hi - lo <= 2 * threshold);
        }
    }
}
