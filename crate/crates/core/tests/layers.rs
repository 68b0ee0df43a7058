mod common;

use common::{random_edges, random_graph, random_hyperedges, random_matrix};
use hgb::gnn::{
    apply_layer, attention_coefficients, gat_layer, gatv2_layer, hyperatten_layer, hyperconv_layer,
    lp_gnn_forward, sage_layer, Architecture, GraphContext, LayerKind, LayerParams, Model,
    ModelSpec,
};
use hgb::graph::Task;
use hgb::matrix::Matrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense `D_v^{-1} H W D_e^{-1} Hᵀ X Θ`, written out entry by entry.
fn hyperconv_dense(x: &Matrix, hyperedges: &[Vec<usize>], w: &[f64], theta: &Matrix) -> Matrix {
    let (n, m) = (x.rows(), hyperedges.len());
    let mut h = Matrix::zeros(n, m);
    for (e, members) in hyperedges.iter().enumerate() {
        for &v in members {
            h[(v, e)] = 1.0;
        }
    }
    let mut dv_inv = Matrix::zeros(n, n);
    for v in 0..n {
        let d: f64 = (0..m).map(|e| h[(v, e)] * w[e]).sum();
        dv_inv[(v, v)] = if d == 0.0 { 0.0 } else { 1.0 / d };
    }
    let mut w_mat = Matrix::zeros(m, m);
    let mut de_inv = Matrix::zeros(m, m);
    for e in 0..m {
        w_mat[(e, e)] = w[e];
        de_inv[(e, e)] = 1.0 / (0..n).map(|v| h[(v, e)]).sum::<f64>();
    }
    dv_inv
        .matmul(&h)
        .matmul(&w_mat)
        .matmul(&de_inv)
        .matmul(&h.transpose())
        .matmul(x)
        .matmul(theta)
}

#[test]
fn hyperconv_matches_dense_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let n = rng.gen_range(1..15);
        let m = rng.gen_range(1..10);
        let he = random_hyperedges(n, m, 5, &mut rng);
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..3.0)).collect();
        let x = random_matrix(n, 4, &mut rng);
        let theta = random_matrix(4, 3, &mut rng);
        let got = hyperconv_layer(
            &x,
            &he,
            &w,
            &LayerParams::new(LayerKind::HyperConv, theta.clone()),
        )
        .unwrap();
        let want = hyperconv_dense(&x, &he, &w, &theta);
        assert!(
            got.max_abs_diff(&want) <= 1e-10,
            "{}",
            got.max_abs_diff(&want)
        );
    }
}

#[test]
fn every_layer_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in LayerKind::ALL {
        for _ in 0..10 {
            let n = rng.gen_range(2..10);
            let g = random_graph(n, &mut rng);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let pg = g.permute_nodes(&perm);
            let p = LayerParams::glorot(kind, 3, 2, true, &mut rng);
            let out = apply_layer(&g.node_features, &GraphContext::from_graph(&g), &p).unwrap();
            let pout = apply_layer(&pg.node_features, &GraphContext::from_graph(&pg), &p).unwrap();
            for v in 0..n {
                for j in 0..2 {
                    assert!((out[(v, j)] - pout[(perm[v], j)]).abs() < 1e-12, "{kind}");
                }
            }
        }
    }
}

#[test]
fn attention_normalizes_per_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for kind in [LayerKind::Gat, LayerKind::GatV2, LayerKind::HyperAtten] {
        for _ in 0..20 {
            let n = rng.gen_range(1..12);
            let g = random_graph(n, &mut rng);
            let ctx = GraphContext::from_graph(&g);
            let p = LayerParams::glorot(kind, 3, 4, false, &mut rng);
            let alpha = attention_coefficients(&g.node_features, &ctx, &p).unwrap();
            // Coefficients come grouped by target in node order; rebuild the groups.
            let groups: Vec<usize> = if kind == LayerKind::HyperAtten {
                let mut pairs: Vec<usize> = g.hyperedges.iter().flatten().copied().collect();
                pairs.sort_unstable();
                pairs
            } else {
                let adj = g.adjacency();
                (0..n)
                    .flat_map(|v| std::iter::repeat(v).take(adj[v].len() + 1))
                    .collect()
            };
            assert_eq!(groups.len(), alpha.len());
            let mut sums = vec![0.0; n];
            for (&v, &a) in groups.iter().zip(&alpha) {
                sums[v] += a;
            }
            for v in 0..n {
                if groups.contains(&v) {
                    assert!(
                        (sums[v] - 1.0).abs() < 1e-12,
                        "{kind} node {v}: {}",
                        sums[v]
                    );
                }
            }
        }
    }
}

#[test]
fn zero_attention_is_mean_over_closed_neighborhood() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 9;
    let edges = random_edges(n, 0.3, &mut rng);
    let x = random_matrix(n, 3, &mut rng);
    let theta = random_matrix(3, 2, &mut rng);
    let zero = Matrix::zeros(2, 1);
    let gat = LayerParams::new(LayerKind::Gat, theta.clone())
        .with_attention(zero.clone(), Some(zero.clone()));
    let v2 = LayerParams::new(LayerKind::GatV2, theta.clone())
        .with_theta2(random_matrix(3, 2, &mut rng))
        .with_attention(zero, None);

    let adj = hgb::graph::adjacency_lists(n, &edges);
    let h = x.matmul(&theta);
    let mut want = Matrix::zeros(n, 2);
    for v in 0..n {
        let closed: Vec<usize> = adj[v].iter().copied().chain([v]).collect();
        for j in 0..2 {
            want[(v, j)] = closed.iter().map(|&u| h[(u, j)]).sum::<f64>() / closed.len() as f64;
        }
    }
    assert!(gat_layer(&x, &edges, &gat).unwrap().max_abs_diff(&want) < 1e-12);
    assert!(gatv2_layer(&x, &edges, &v2).unwrap().max_abs_diff(&want) < 1e-12);
}

#[test]
fn sage_constant_features_double() {
    let edges = [[0, 1], [1, 2], [3, 4]];
    let x = Matrix::filled(6, 2, 1.5);
    let p = LayerParams::new(LayerKind::Sage, Matrix::identity(2)).with_theta2(Matrix::identity(2));
    let out = sage_layer(&x, &edges, &p).unwrap();
    for v in 0..5 {
        assert_eq!(out.row(v), &[3.0, 3.0]);
    }
    assert_eq!(out.row(5), &[1.5, 1.5]);
}

#[test]
fn hyperatten_with_single_memberships_equals_hyperconv() {
    // With one hyperedge per node every coefficient is 1, whatever `a` is.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let he = vec![vec![0, 2, 4], vec![1, 3], vec![5]];
    let x = random_matrix(6, 3, &mut rng);
    let theta = random_matrix(3, 2, &mut rng);
    let p = LayerParams::new(LayerKind::HyperAtten, theta.clone()).with_attention(
        random_matrix(2, 1, &mut rng),
        Some(random_matrix(2, 1, &mut rng)),
    );
    let ctx = GraphContext::new(6, &[], &he, &[1.0; 3]);
    assert!(attention_coefficients(&x, &ctx, &p)
        .unwrap()
        .iter()
        .all(|&a| (a - 1.0).abs() < 1e-15));
    let got = hyperatten_layer(&x, &he, &p).unwrap();
    let want = hyperconv_layer(
        &x,
        &he,
        &[1.0; 3],
        &LayerParams::new(LayerKind::HyperConv, theta),
    )
    .unwrap();
    assert!(got.max_abs_diff(&want) < 1e-12);
}

#[test]
fn hyperatten_zero_attention_is_uniform() {
    let he = vec![vec![0, 1], vec![0, 2], vec![0, 1, 2]];
    let p = LayerParams::new(LayerKind::HyperAtten, Matrix::identity(2))
        .with_attention(Matrix::zeros(2, 1), Some(Matrix::zeros(2, 1)));
    let ctx = GraphContext::new(3, &[], &he, &[1.0; 3]);
    let alpha = attention_coefficients(
        &Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]),
        &ctx,
        &p,
    )
    .unwrap();
    // Node 0 sits in three hyperedges, nodes 1 and 2 in two each.
    let third = 1.0 / 3.0;
    let want = [third, third, third, 0.5, 0.5, 0.5, 0.5];
    for (a, w) in alpha.iter().zip(want) {
        assert!((a - w).abs() < 1e-15);
    }
}

#[test]
fn hyperconv_orphan_rows_are_zero() {
    let p = LayerParams::new(LayerKind::HyperConv, Matrix::identity(2));
    let out = hyperconv_layer(&Matrix::filled(4, 2, 3.0), &[vec![0, 1]], &[2.0], &p).unwrap();
    assert_eq!(out.row(2), &[0.0, 0.0]);
    assert_eq!(out.row(3), &[0.0, 0.0]);
}

fn lp_model(task: Task, seed: u64) -> (Model, GraphContext, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_graph(8, &mut rng);
    let mut spec = ModelSpec::for_task("lp:gcn+hyperconv".parse::<Architecture>().unwrap(), task);
    spec.hidden_dim = 5;
    let m = Model::init(&spec, 3, task, &mut rng).unwrap();
    (m, GraphContext::from_graph(&g), g.node_features)
}

#[test]
fn lp_identity_probes_are_bit_exact() {
    let (model, ctx, x) = lp_model(Task::Regression, 1);
    let h1 = model.stack_output(0, &ctx, &x).unwrap();
    let h2 = model.stack_output(1, &ctx, &x).unwrap();
    let k = h1.cols();
    let mut left = Matrix::zeros(2 * k, k);
    let mut right = Matrix::zeros(2 * k, k);
    for i in 0..k {
        left[(i, i)] = 1.0;
        right[(k + i, i)] = 1.0;
    }
    let b = Matrix::zeros(1, k);
    assert_eq!(
        lp_gnn_forward(&h1, &h2, &left, &b, Task::Regression).unwrap(),
        h1
    );
    assert_eq!(
        lp_gnn_forward(&h1, &h2, &right, &b, Task::Regression).unwrap(),
        h2
    );

    // The same probe through a full model.
    let mut probe = model.clone();
    probe.spec.output_dim = k;
    probe.head = Some(hgb::gnn::LinearHead {
        theta: left,
        bias: b,
    });
    let out = probe.predict(&ctx, &hgb::gnn::Features::Dense(x)).unwrap();
    assert_eq!(out, h1);
}

#[test]
fn lp_classification_rows_are_distributions() {
    let (model, ctx, x) = lp_model(Task::Classification { num_classes: 4 }, 2);
    let out = model.predict(&ctx, &hgb::gnn::Features::Dense(x)).unwrap();
    for row in out.iter_rows() {
        let s: f64 = row.iter().map(|v| v.exp()).sum();
        assert!((s - 1.0).abs() < 1e-10);
    }
}

#[test]
fn lp_rejects_mismatched_theta() {
    let a = Matrix::zeros(3, 2);
    assert!(lp_gnn_forward(
        &a,
        &a,
        &Matrix::zeros(3, 2),
        &Matrix::zeros(1, 2),
        Task::Regression
    )
    .is_err());
}

#[test]
fn frozen_forward_is_bit_deterministic() {
    let (model, ctx, x) = lp_model(Task::Classification { num_classes: 3 }, 4);
    let f = hgb::gnn::Features::Dense(x);
    assert_eq!(
        model.predict(&ctx, &f).unwrap(),
        model.predict(&ctx, &f).unwrap()
    );
}
