//! The six message-passing layer families.
//!
//! Every layer maps `n x in` node features to `n x out` and leaves the
//! activation to the model. Row vectors are used throughout, so a linear
//! map is `X Θ` with `Θ` of shape `in x out`.

use super::context::GraphContext;
use super::tape::{Tape, Var, LEAKY_RELU_SLOPE};
use super::GnnError;
use crate::matrix::{Csr, Matrix};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Gcn,
    Sage,
    Gat,
    GatV2,
    HyperConv,
    HyperAtten,
}

impl LayerKind {
    pub const ALL: [LayerKind; 6] = [
        LayerKind::Gcn,
        LayerKind::Sage,
        LayerKind::Gat,
        LayerKind::GatV2,
        LayerKind::HyperConv,
        LayerKind::HyperAtten,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Gcn => "gcn",
            LayerKind::Sage => "sage",
            LayerKind::Gat => "gat",
            LayerKind::GatV2 => "gatv2",
            LayerKind::HyperConv => "hyperconv",
            LayerKind::HyperAtten => "hyperatten",
        }
    }

    pub fn uses_hyperedges(self) -> bool {
        matches!(self, LayerKind::HyperConv | LayerKind::HyperAtten)
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayerKind {
    type Err = GnnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LayerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| GnnError::Spec(format!("unknown layer `{s}`")))
    }
}

/// Learned weights of one layer.
///
/// | kind       | `theta`  | `theta2` | `att_src`      | `att_dst`        |
/// |------------|----------|----------|----------------|------------------|
/// | GCN        | Θ        |          |                |                  |
/// | SAGE       | Θ_self   | Θ_nbr    |                |                  |
/// | GAT        | Θ        |          | a (source)     | a (target)       |
/// | GATv2      | Θ_source | Θ_target | a              |                  |
/// | HyperConv  | Θ        |          |                |                  |
/// | HyperAtten | Θ        |          | a (node)       | a (hyperedge)    |
///
/// Attention vectors are `out x 1` columns and `bias` is `1 x out`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub kind: LayerKind,
    pub theta: Matrix,
    pub theta2: Option<Matrix>,
    pub att_src: Option<Matrix>,
    pub att_dst: Option<Matrix>,
    pub bias: Option<Matrix>,
}

pub(crate) fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-a..=a)).collect();
    Matrix::from_vec(rows, cols, data)
}

impl LayerParams {
    /// Parameters with only `theta` set; add the rest with the `with_*` methods.
    pub fn new(kind: LayerKind, theta: Matrix) -> Self {
        LayerParams {
            kind,
            theta,
            theta2: None,
            att_src: None,
            att_dst: None,
            bias: None,
        }
    }

    pub fn with_theta2(mut self, m: Matrix) -> Self {
        self.theta2 = Some(m);
        self
    }

    pub fn with_attention(mut self, src: Matrix, dst: Option<Matrix>) -> Self {
        self.att_src = Some(src);
        self.att_dst = dst;
        self
    }

    pub fn with_bias(mut self, b: Matrix) -> Self {
        self.bias = Some(b);
        self
    }

    /// Glorot-uniform weights and a zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        kind: LayerKind,
        input: usize,
        output: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let mut p = LayerParams::new(kind, glorot(input, output, rng));
        match kind {
            LayerKind::Sage | LayerKind::GatV2 => p.theta2 = Some(glorot(input, output, rng)),
            _ => {}
        }
        match kind {
            LayerKind::Gat | LayerKind::HyperAtten => {
                p.att_src = Some(glorot(output, 1, rng));
                p.att_dst = Some(glorot(output, 1, rng));
            }
            LayerKind::GatV2 => p.att_src = Some(glorot(output, 1, rng)),
            _ => {}
        }
        if bias {
            p.bias = Some(Matrix::zeros(1, output));
        }
        p
    }

    pub fn input_dim(&self) -> usize {
        self.theta.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.theta.cols()
    }

    /// Checks every shape against `theta` and the kind's required slots.
    pub fn check(&self) -> Result<(), GnnError> {
        let (i, o) = self.theta.shape();
        let need = |slot: &Option<Matrix>, name: &str, shape: (usize, usize)| match slot {
            Some(m) if m.shape() != shape => Err(GnnError::shape(name, shape, m.shape())),
            None => Err(GnnError::Spec(format!(
                "{} layer needs `{name}`",
                self.kind
            ))),
            _ => Ok(()),
        };
        match self.kind {
            LayerKind::Sage => need(&self.theta2, "theta2", (i, o))?,
            LayerKind::GatV2 => {
                need(&self.theta2, "theta2", (i, o))?;
                need(&self.att_src, "att_src", (o, 1))?;
            }
            LayerKind::Gat | LayerKind::HyperAtten => {
                need(&self.att_src, "att_src", (o, 1))?;
                need(&self.att_dst, "att_dst", (o, 1))?;
            }
            LayerKind::Gcn | LayerKind::HyperConv => {}
        }
        if let Some(b) = &self.bias {
            if b.shape() != (1, o) {
                return Err(GnnError::shape("bias", (1, o), b.shape()));
            }
        }
        Ok(())
    }

    /// Present matrices in a fixed order: theta, theta2, att_src, att_dst, bias.
    pub fn matrices(&self) -> impl Iterator<Item = &Matrix> {
        std::iter::once(&self.theta).chain(
            [&self.theta2, &self.att_src, &self.att_dst, &self.bias]
                .into_iter()
                .flatten(),
        )
    }

    pub fn matrices_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        std::iter::once(&mut self.theta).chain(
            [
                &mut self.theta2,
                &mut self.att_src,
                &mut self.att_dst,
                &mut self.bias,
            ]
            .into_iter()
            .flatten(),
        )
    }

    pub fn num_parameters(&self) -> usize {
        self.matrices().map(|m| m.rows() * m.cols()).sum()
    }

    pub(crate) fn register(&self, tape: &mut Tape) -> LayerVars {
        LayerVars {
            theta: tape.param(self.theta.clone()),
            theta2: self.theta2.as_ref().map(|m| tape.param(m.clone())),
            att_src: self.att_src.as_ref().map(|m| tape.param(m.clone())),
            att_dst: self.att_dst.as_ref().map(|m| tape.param(m.clone())),
            bias: self.bias.as_ref().map(|m| tape.param(m.clone())),
        }
    }
}

/// Tape handles for one layer, in the order of [`LayerParams::matrices`].
pub(crate) struct LayerVars {
    theta: Var,
    theta2: Option<Var>,
    att_src: Option<Var>,
    att_dst: Option<Var>,
    bias: Option<Var>,
}

impl LayerVars {
    pub(crate) fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        std::iter::once(self.theta).chain(
            [self.theta2, self.att_src, self.att_dst, self.bias]
                .into_iter()
                .flatten(),
        )
    }
}

/// Layer input: either a value on the tape or constant sparse features.
#[derive(Clone)]
pub enum Input {
    Dense(Var),
    Sparse(Arc<Csr>),
}

fn project(tape: &mut Tape, x: &Input, w: Var) -> Var {
    match x {
        Input::Dense(v) => tape.matmul(*v, w),
        Input::Sparse(s) => {
            // Constant sparse input: X Θ as a sparse-times-parameter product.
            tape.spmm(Arc::clone(s), w)
        }
    }
}

pub(crate) fn forward(
    tape: &mut Tape,
    p: &LayerParams,
    v: &LayerVars,
    ctx: &GraphContext,
    x: &Input,
) -> Var {
    let n = ctx.num_nodes;
    let out = match p.kind {
        LayerKind::Gcn => {
            let h = project(tape, x, v.theta);
            tape.spmm(Arc::clone(&ctx.gcn), h)
        }
        LayerKind::Sage => {
            let own = project(tape, x, v.theta);
            let h = project(tape, x, v.theta2.expect("checked"));
            let nbr = tape.spmm(Arc::clone(&ctx.neighbor_mean), h);
            tape.add(own, nbr)
        }
        LayerKind::Gat => {
            let h = project(tape, x, v.theta);
            let s_src = tape.matmul(h, v.att_src.expect("checked"));
            let s_dst = tape.matmul(h, v.att_dst.expect("checked"));
            let a = tape.gather(s_src, Arc::clone(&ctx.att_src));
            let b = tape.gather(s_dst, Arc::clone(&ctx.att_dst));
            let e = tape.add(a, b);
            let e = tape.leaky_relu(e, LEAKY_RELU_SLOPE);
            attend(tape, h, e, ctx)
        }
        LayerKind::GatV2 => {
            let hl = project(tape, x, v.theta);
            let hr = project(tape, x, v.theta2.expect("checked"));
            let a = tape.gather(hl, Arc::clone(&ctx.att_src));
            let b = tape.gather(hr, Arc::clone(&ctx.att_dst));
            let z = tape.add(a, b);
            let z = tape.leaky_relu(z, LEAKY_RELU_SLOPE);
            let e = tape.matmul(z, v.att_src.expect("checked"));
            attend(tape, hl, e, ctx)
        }
        LayerKind::HyperConv => {
            let h = project(tape, x, v.theta);
            let z = tape.spmm(Arc::clone(&ctx.node_to_edge), h);
            tape.spmm(Arc::clone(&ctx.edge_to_node), z)
        }
        LayerKind::HyperAtten => {
            let h = project(tape, x, v.theta);
            let z = tape.spmm(Arc::clone(&ctx.incidence_t), h);
            let s_node = tape.matmul(h, v.att_src.expect("checked"));
            let s_edge = tape.matmul(z, v.att_dst.expect("checked"));
            let a = tape.gather(s_node, Arc::clone(&ctx.inc_node));
            let b = tape.gather(s_edge, Arc::clone(&ctx.inc_edge));
            let e = tape.add(a, b);
            let e = tape.leaky_relu(e, LEAKY_RELU_SLOPE);
            let alpha = tape.segment_softmax(e, Arc::clone(&ctx.inc_node), n);

            let msg = tape.gather(h, Arc::clone(&ctx.inc_node));
            let msg = tape.scale_rows(msg, alpha);
            let msg = tape.scale_rows_const(msg, Arc::clone(&ctx.inc_edge_scale));
            let z2 = tape.scatter_add(msg, Arc::clone(&ctx.inc_edge), ctx.num_hyperedges);

            let back = tape.gather(z2, Arc::clone(&ctx.inc_edge));
            let back = tape.scale_rows(back, alpha);
            let back = tape.scale_rows_const(back, Arc::clone(&ctx.inc_node_scale));
            tape.scatter_add(back, Arc::clone(&ctx.inc_node), n)
        }
    };
    match v.bias {
        Some(b) => tape.add_row(out, b),
        None => out,
    }
}

/// Records one layer on `tape` with fresh parameter leaves. Returns the
/// output and the parameter handles in the order of [`LayerParams::matrices`].
pub fn record(tape: &mut Tape, p: &LayerParams, ctx: &GraphContext, x: &Input) -> (Var, Vec<Var>) {
    let v = p.register(tape);
    let out = forward(tape, p, &v, ctx, x);
    (out, v.vars().collect())
}

fn attend(tape: &mut Tape, h: Var, scores: Var, ctx: &GraphContext) -> Var {
    let alpha = tape.segment_softmax(scores, Arc::clone(&ctx.att_dst), ctx.num_nodes);
    let msg = tape.gather(h, Arc::clone(&ctx.att_src));
    let msg = tape.scale_rows(msg, alpha);
    tape.scatter_add(msg, Arc::clone(&ctx.att_dst), ctx.num_nodes)
}

/// Attention coefficients of a GAT, GATv2 or HyperAtten layer, one per
/// attention edge (`u -> v` pairs grouped by `v`) or incidence pair
/// (grouped by node).
pub fn attention_coefficients(
    x: &Matrix,
    ctx: &GraphContext,
    p: &LayerParams,
) -> Result<Vec<f64>, GnnError> {
    check_input(x, ctx, p)?;
    let mut tape = Tape::new();
    let v = p.register(&mut tape);
    let xv = tape.constant(x.clone());
    let h = tape.matmul(xv, v.theta);
    let (scores, segment) = match p.kind {
        LayerKind::Gat => {
            let s = tape.matmul(h, v.att_src.expect("checked"));
            let d = tape.matmul(h, v.att_dst.expect("checked"));
            let a = tape.gather(s, Arc::clone(&ctx.att_src));
            let b = tape.gather(d, Arc::clone(&ctx.att_dst));
            let e = tape.add(a, b);
            (tape.leaky_relu(e, LEAKY_RELU_SLOPE), &ctx.att_dst)
        }
        LayerKind::GatV2 => {
            let hr = tape.matmul(xv, v.theta2.expect("checked"));
            let a = tape.gather(h, Arc::clone(&ctx.att_src));
            let b = tape.gather(hr, Arc::clone(&ctx.att_dst));
            let z = tape.add(a, b);
            let z = tape.leaky_relu(z, LEAKY_RELU_SLOPE);
            (tape.matmul(z, v.att_src.expect("checked")), &ctx.att_dst)
        }
        LayerKind::HyperAtten => {
            let z = tape.spmm(Arc::clone(&ctx.incidence_t), h);
            let s = tape.matmul(h, v.att_src.expect("checked"));
            let d = tape.matmul(z, v.att_dst.expect("checked"));
            let a = tape.gather(s, Arc::clone(&ctx.inc_node));
            let b = tape.gather(d, Arc::clone(&ctx.inc_edge));
            let e = tape.add(a, b);
            (tape.leaky_relu(e, LEAKY_RELU_SLOPE), &ctx.inc_node)
        }
        k => return Err(GnnError::Spec(format!("{k} layer has no attention"))),
    };
    let alpha = tape.segment_softmax(scores, Arc::clone(segment), ctx.num_nodes);
    Ok(tape.value(alpha).as_slice().to_vec())
}

fn check_input(x: &Matrix, ctx: &GraphContext, p: &LayerParams) -> Result<(), GnnError> {
    p.check()?;
    if x.rows() != ctx.num_nodes {
        return Err(GnnError::shape(
            "features",
            (ctx.num_nodes, p.input_dim()),
            x.shape(),
        ));
    }
    if x.cols() != p.input_dim() {
        return Err(GnnError::shape(
            "theta",
            (x.cols(), p.output_dim()),
            p.theta.shape(),
        ));
    }
    Ok(())
}

fn check_edges(n: usize, edges: &[[usize; 2]]) -> Result<(), GnnError> {
    match edges.iter().flatten().find(|&&v| v >= n) {
        Some(&v) => Err(GnnError::NodeOutOfRange {
            node: v,
            num_nodes: n,
        }),
        None => Ok(()),
    }
}

fn check_hyperedges(n: usize, hyperedges: &[Vec<usize>], weights: &[f64]) -> Result<(), GnnError> {
    if weights.len() != hyperedges.len() {
        return Err(GnnError::LengthMismatch {
            what: "hyperedge weights",
            expected: hyperedges.len(),
            found: weights.len(),
        });
    }
    if let Some(&v) = hyperedges.iter().flatten().find(|&&v| v >= n) {
        return Err(GnnError::NodeOutOfRange {
            node: v,
            num_nodes: n,
        });
    }
    if hyperedges.iter().any(Vec::is_empty) {
        return Err(GnnError::Spec("empty hyperedge".into()));
    }
    Ok(())
}

/// Applies one layer outside of training.
pub fn apply_layer(x: &Matrix, ctx: &GraphContext, p: &LayerParams) -> Result<Matrix, GnnError> {
    check_input(x, ctx, p)?;
    let mut tape = Tape::new();
    let v = p.register(&mut tape);
    let xv = tape.constant(x.clone());
    let out = forward(&mut tape, p, &v, ctx, &Input::Dense(xv));
    Ok(tape.value(out).clone())
}

fn expect_kind(p: &LayerParams, kinds: &[LayerKind]) -> Result<(), GnnError> {
    if kinds.contains(&p.kind) {
        Ok(())
    } else {
        Err(GnnError::Spec(format!(
            "parameters are for a {} layer",
            p.kind
        )))
    }
}

pub fn gcn_layer(x: &Matrix, edges: &[[usize; 2]], p: &LayerParams) -> Result<Matrix, GnnError> {
    expect_kind(p, &[LayerKind::Gcn])?;
    check_edges(x.rows(), edges)?;
    apply_layer(x, &GraphContext::new(x.rows(), edges, &[], &[]), p)
}

pub fn sage_layer(x: &Matrix, edges: &[[usize; 2]], p: &LayerParams) -> Result<Matrix, GnnError> {
    expect_kind(p, &[LayerKind::Sage])?;
    check_edges(x.rows(), edges)?;
    apply_layer(x, &GraphContext::new(x.rows(), edges, &[], &[]), p)
}

pub fn gat_layer(x: &Matrix, edges: &[[usize; 2]], p: &LayerParams) -> Result<Matrix, GnnError> {
    expect_kind(p, &[LayerKind::Gat])?;
    check_edges(x.rows(), edges)?;
    apply_layer(x, &GraphContext::new(x.rows(), edges, &[], &[]), p)
}

pub fn gatv2_layer(x: &Matrix, edges: &[[usize; 2]], p: &LayerParams) -> Result<Matrix, GnnError> {
    expect_kind(p, &[LayerKind::GatV2])?;
    check_edges(x.rows(), edges)?;
    apply_layer(x, &GraphContext::new(x.rows(), edges, &[], &[]), p)
}

/// `D_v^{-1} H W D_e^{-1} Hᵀ X Θ`; nodes in no hyperedge get zero rows.
pub fn hyperconv_layer(
    x: &Matrix,
    hyperedges: &[Vec<usize>],
    weights: &[f64],
    p: &LayerParams,
) -> Result<Matrix, GnnError> {
    expect_kind(p, &[LayerKind::HyperConv])?;
    check_hyperedges(x.rows(), hyperedges, weights)?;
    apply_layer(x, &GraphContext::new(x.rows(), &[], hyperedges, weights), p)
}

/// Unit-weight hyperedges with learned incidence attention.
pub fn hyperatten_layer(
    x: &Matrix,
    hyperedges: &[Vec<usize>],
    p: &LayerParams,
) -> Result<Matrix, GnnError> {
    expect_kind(p, &[LayerKind::HyperAtten])?;
    let weights = vec![1.0; hyperedges.len()];
    check_hyperedges(x.rows(), hyperedges, &weights)?;
    apply_layer(
        x,
        &GraphContext::new(x.rows(), &[], hyperedges, &weights),
        p,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows)
    }

    #[test]
    fn gcn_two_nodes() {
        let p = LayerParams::new(LayerKind::Gcn, m(&[&[1.0]]));
        let out = gcn_layer(&m(&[&[1.0], &[0.0]]), &[[0, 1]], &p).unwrap();
        assert_eq!(out, m(&[&[0.5], &[0.5]]));
    }

    #[test]
    fn gcn_without_edges_is_identity() {
        let x = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let p = LayerParams::new(LayerKind::Gcn, Matrix::identity(2));
        assert_eq!(gcn_layer(&x, &[], &p).unwrap(), x);
    }

    #[test]
    fn sage_path() {
        let p = LayerParams::new(LayerKind::Sage, m(&[&[1.0]])).with_theta2(m(&[&[1.0]]));
        let out = sage_layer(&m(&[&[0.0], &[1.0], &[2.0]]), &[[0, 1], [1, 2]], &p).unwrap();
        assert_eq!(out, m(&[&[1.0], &[2.0], &[3.0]]));
    }

    #[test]
    fn sage_isolated_node_keeps_self_term() {
        let p = LayerParams::new(LayerKind::Sage, m(&[&[2.0]])).with_theta2(m(&[&[1.0]]));
        let out = sage_layer(&m(&[&[1.0], &[5.0], &[7.0]]), &[[0, 1]], &p).unwrap();
        assert_eq!(out[(2, 0)], 14.0);
    }

    #[test]
    fn hyperconv_mean_then_redistribute() {
        let p = LayerParams::new(LayerKind::HyperConv, m(&[&[1.0]]));
        let out =
            hyperconv_layer(&m(&[&[1.0], &[3.0], &[9.0]]), &[vec![0, 1]], &[1.0], &p).unwrap();
        assert_eq!(out, m(&[&[2.0], &[2.0], &[0.0]]));
    }

    #[test]
    fn gat_single_node() {
        let p = LayerParams::new(LayerKind::Gat, m(&[&[2.0]]))
            .with_attention(m(&[&[0.3]]), Some(m(&[&[-0.7]])));
        assert_eq!(gat_layer(&m(&[&[1.5]]), &[], &p).unwrap(), m(&[&[3.0]]));
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let p = LayerParams::new(LayerKind::Gcn, m(&[&[1.0]]));
        assert!(sage_layer(&m(&[&[1.0]]), &[], &p).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let p = LayerParams::new(LayerKind::Gcn, Matrix::identity(3));
        assert!(matches!(
            gcn_layer(&m(&[&[1.0, 2.0]]), &[], &p),
            Err(GnnError::Shape { .. })
        ));
    }
}
