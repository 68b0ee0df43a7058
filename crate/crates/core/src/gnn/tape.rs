//! Reverse-mode differentiation over a recorded tape of matrix operations.
//!
//! Values are recorded eagerly as operations are applied; [`Tape::backward`]
//! then walks the tape once in reverse. Only nodes that depend on a
//! parameter carry gradients, so large constant inputs cost nothing on the
//! way back.
//!
//! Besides dense algebra the op set covers what message passing needs: a
//! product with a constant sparse operator, row gather/scatter over an
//! index list, and softmax within index segments.

use crate::matrix::{Csr, Matrix};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

pub const LEAKY_RELU_SLOPE: f64 = 0.2;

enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMatMul(Arc<Csr>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    MulConst(Var, Arc<Matrix>),
    ScaleRows(Var, Var),
    ScaleRowsConst(Var, Arc<Vec<f64>>),
    Gather(Var, Arc<Vec<usize>>),
    ScatterAdd(Var, Arc<Vec<usize>>),
    SegmentSoftmax(Var, Arc<Vec<usize>>, usize),
    ConcatCols(Var, Var),
    Relu(Var),
    Elu(Var),
    LeakyRelu(Var, f64),
    SoftmaxRows(Var),
    LogSoftmaxRows(Var),
    Dropout(Var, Matrix),
    Mean(Var),
    BceWithLogits(Var, Arc<Matrix>),
    Mse(Var, Arc<Matrix>),
}

struct Node {
    value: Matrix,
    op: Op,
    tracked: bool,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients indexed by [`Var`].
pub struct Gradients(Vec<Option<Matrix>>);

impl Gradients {
    /// Gradient of the loss with respect to `v`; `None` if `v` does not
    /// depend on any parameter.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.0.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Matrix> {
        self.0.get_mut(v.0).and_then(Option::take)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `max(x, 0) - x*t + ln(1 + e^{-|x|})`.
pub fn bce_with_logits_elem(x: f64, t: f64) -> f64 {
    x.max(0.0) - x * t + (-x.abs()).exp().ln_1p()
}

fn softmax_row(row: &[f64], out: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &x) in out.iter_mut().zip(row) {
        *o = (x - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    /// A leaf that receives gradients.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf that does not.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).matmul(self.value(b));
        let t = self.tracked(a) || self.tracked(b);
        self.push(value, Op::MatMul(a, b), t)
    }

    /// `s * x` for a constant sparse `s`.
    pub fn spmm(&mut self, s: Arc<Csr>, x: Var) -> Var {
        let value = s.matmul(self.value(x));
        let t = self.tracked(x);
        self.push(value, Op::SpMatMul(s, x), t)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let t = self.tracked(a) || self.tracked(b);
        self.push(value, Op::Add(a, b), t)
    }

    /// Adds the `1 x d` row `b` to every row of `x`.
    pub fn add_row(&mut self, x: Var, b: Var) -> Var {
        let bias = self.value(b);
        assert_eq!(bias.rows(), 1, "bias must be a single row");
        assert_eq!(bias.cols(), self.value(x).cols(), "bias width");
        let mut value = self.value(x).clone();
        for i in 0..value.rows() {
            for (o, &c) in value.row_mut(i).iter_mut().zip(bias.row(0)) {
                *o += c;
            }
        }
        let t = self.tracked(x) || self.tracked(b);
        self.push(value, Op::AddRow(x, b), t)
    }

    /// Element-wise product with a constant.
    pub fn mul_const(&mut self, x: Var, c: Arc<Matrix>) -> Var {
        let value = self.value(x).zip_map(&c, |a, b| a * b);
        let t = self.tracked(x);
        self.push(value, Op::MulConst(x, c), t)
    }

    /// Multiplies row `i` of `x` by `s[i]`, with `s` an `n x 1` column.
    pub fn scale_rows(&mut self, x: Var, s: Var) -> Var {
        let (xv, sv) = (self.value(x), self.value(s));
        assert_eq!(sv.shape(), (xv.rows(), 1), "row scale shape");
        let mut value = xv.clone();
        for i in 0..value.rows() {
            let f = sv[(i, 0)];
            value.row_mut(i).iter_mut().for_each(|o| *o *= f);
        }
        let t = self.tracked(x) || self.tracked(s);
        self.push(value, Op::ScaleRows(x, s), t)
    }

    pub fn scale_rows_const(&mut self, x: Var, s: Arc<Vec<f64>>) -> Var {
        assert_eq!(s.len(), self.value(x).rows(), "row scale length");
        let mut value = self.value(x).clone();
        for (i, &f) in s.iter().enumerate() {
            value.row_mut(i).iter_mut().for_each(|o| *o *= f);
        }
        let t = self.tracked(x);
        self.push(value, Op::ScaleRowsConst(x, s), t)
    }

    /// Row `k` of the result is row `index[k]` of `x`.
    pub fn gather(&mut self, x: Var, index: Arc<Vec<usize>>) -> Var {
        let value = self.value(x).select_rows(&index);
        let t = self.tracked(x);
        self.push(value, Op::Gather(x, index), t)
    }

    /// `out[index[k]] += x[k]` into `num_rows` zero rows.
    pub fn scatter_add(&mut self, x: Var, index: Arc<Vec<usize>>, num_rows: usize) -> Var {
        let xv = self.value(x);
        assert_eq!(index.len(), xv.rows(), "scatter index length");
        let mut value = Matrix::zeros(num_rows, xv.cols());
        for (k, &dst) in index.iter().enumerate() {
            for (o, &v) in value.row_mut(dst).iter_mut().zip(xv.row(k)) {
                *o += v;
            }
        }
        let t = self.tracked(x);
        self.push(value, Op::ScatterAdd(x, index), t)
    }

    /// Softmax of each column over the rows sharing a segment id.
    pub fn segment_softmax(
        &mut self,
        x: Var,
        segment: Arc<Vec<usize>>,
        num_segments: usize,
    ) -> Var {
        let xv = self.value(x);
        assert_eq!(segment.len(), xv.rows(), "segment length");
        let d = xv.cols();
        let mut max = Matrix::filled(num_segments, d, f64::NEG_INFINITY);
        for (k, &s) in segment.iter().enumerate() {
            for j in 0..d {
                max[(s, j)] = max[(s, j)].max(xv[(k, j)]);
            }
        }
        let mut value = Matrix::zeros(xv.rows(), d);
        let mut sum = Matrix::zeros(num_segments, d);
        for (k, &s) in segment.iter().enumerate() {
            for j in 0..d {
                let e = (xv[(k, j)] - max[(s, j)]).exp();
                value[(k, j)] = e;
                sum[(s, j)] += e;
            }
        }
        for (k, &s) in segment.iter().enumerate() {
            for j in 0..d {
                value[(k, j)] /= sum[(s, j)];
            }
        }
        let t = self.tracked(x);
        self.push(value, Op::SegmentSoftmax(x, segment, num_segments), t)
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).hcat(self.value(b));
        let t = self.tracked(a) || self.tracked(b);
        self.push(value, Op::ConcatCols(a, b), t)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| if v < 0.0 { 0.0 } else { v });
        let t = self.tracked(x);
        self.push(value, Op::Relu(x), t)
    }

    /// ELU with `alpha = 1`.
    pub fn elu(&mut self, x: Var) -> Var {
        let value = self.value(x).map(|v| if v > 0.0 { v } else { v.exp_m1() });
        let t = self.tracked(x);
        self.push(value, Op::Elu(x), t)
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        let value = self.value(x).map(|v| if v > 0.0 { v } else { slope * v });
        let t = self.tracked(x);
        self.push(value, Op::LeakyRelu(x, slope), t)
    }

    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let mut value = Matrix::zeros(xv.rows(), xv.cols());
        for i in 0..xv.rows() {
            softmax_row(xv.row(i), value.row_mut(i));
        }
        let t = self.tracked(x);
        self.push(value, Op::SoftmaxRows(x), t)
    }

    pub fn log_softmax_rows(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let mut value = xv.clone();
        for i in 0..value.rows() {
            let row = value.row_mut(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            row.iter_mut().for_each(|v| *v -= lse);
        }
        let t = self.tracked(x);
        self.push(value, Op::LogSoftmaxRows(x), t)
    }

    /// Multiplies by a fixed mask; callers build it with entries `0` or
    /// `1 / (1 - p)`.
    pub fn dropout(&mut self, x: Var, mask: Matrix) -> Var {
        let value = self.value(x).zip_map(&mask, |a, m| a * m);
        let t = self.tracked(x);
        self.push(value, Op::Dropout(x, mask), t)
    }

    /// Mean of all entries, as a `1 x 1` matrix.
    pub fn mean(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let value = Matrix::filled(1, 1, xv.sum() / (xv.rows() * xv.cols()) as f64);
        let t = self.tracked(x);
        self.push(value, Op::Mean(x), t)
    }

    /// Mean binary cross-entropy of `sigmoid(logits)` against `targets`.
    pub fn bce_with_logits(&mut self, logits: Var, targets: Arc<Matrix>) -> Var {
        let xv = self.value(logits);
        assert_eq!(xv.shape(), targets.shape(), "bce shape mismatch");
        let total: f64 = xv
            .as_slice()
            .iter()
            .zip(targets.as_slice())
            .map(|(&x, &y)| bce_with_logits_elem(x, y))
            .sum();
        let value = Matrix::filled(1, 1, total / xv.as_slice().len() as f64);
        let t = self.tracked(logits);
        self.push(value, Op::BceWithLogits(logits, targets), t)
    }

    /// Mean squared error against `targets`.
    pub fn mse(&mut self, pred: Var, targets: Arc<Matrix>) -> Var {
        let xv = self.value(pred);
        assert_eq!(xv.shape(), targets.shape(), "mse shape mismatch");
        let total: f64 = xv
            .as_slice()
            .iter()
            .zip(targets.as_slice())
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum();
        let value = Matrix::filled(1, 1, total / xv.as_slice().len() as f64);
        let t = self.tracked(pred);
        self.push(value, Op::Mse(pred, targets), t)
    }

    /// Gradients of the `1 x 1` node `loss` with respect to every tracked node.
    pub fn backward(&self, loss: Var) -> Gradients {
        assert_eq!(self.value(loss).shape(), (1, 1), "loss must be a scalar");
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.tracked {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let send = |v: Var, delta: Matrix, grads: &mut Vec<Option<Matrix>>| {
                if !self.nodes[v.0].tracked {
                    return;
                }
                match &mut grads[v.0] {
                    Some(acc) => acc.add_assign(&delta),
                    slot => *slot = Some(delta),
                }
            };
            let y = &node.value;
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    if self.tracked(*a) {
                        send(*a, g.matmul_t(self.value(*b)), &mut grads);
                    }
                    if self.tracked(*b) {
                        send(*b, self.value(*a).t_matmul(&g), &mut grads);
                    }
                }
                Op::SpMatMul(s, x) => send(*x, s.t_matmul(&g), &mut grads),
                Op::Add(a, b) => {
                    send(*a, g.clone(), &mut grads);
                    send(*b, g, &mut grads);
                }
                Op::AddRow(x, b) => {
                    if self.tracked(*b) {
                        let mut db = Matrix::zeros(1, g.cols());
                        for r in g.iter_rows() {
                            for (o, &v) in db.row_mut(0).iter_mut().zip(r) {
                                *o += v;
                            }
                        }
                        send(*b, db, &mut grads);
                    }
                    send(*x, g, &mut grads);
                }
                Op::MulConst(x, c) => send(*x, g.zip_map(c, |a, b| a * b), &mut grads),
                Op::ScaleRows(x, s) => {
                    let (xv, sv) = (self.value(*x), self.value(*s));
                    if self.tracked(*s) {
                        let ds: Vec<f64> = (0..g.rows())
                            .map(|k| g.row(k).iter().zip(xv.row(k)).map(|(a, b)| a * b).sum())
                            .collect();
                        send(*s, Matrix::column(&ds), &mut grads);
                    }
                    if self.tracked(*x) {
                        let mut dx = g;
                        for k in 0..dx.rows() {
                            let f = sv[(k, 0)];
                            dx.row_mut(k).iter_mut().for_each(|o| *o *= f);
                        }
                        send(*x, dx, &mut grads);
                    }
                }
                Op::ScaleRowsConst(x, s) => {
                    let mut dx = g;
                    for (k, &f) in s.iter().enumerate() {
                        dx.row_mut(k).iter_mut().for_each(|o| *o *= f);
                    }
                    send(*x, dx, &mut grads);
                }
                Op::Gather(x, index) => {
                    let xv = self.value(*x);
                    let mut dx = Matrix::zeros(xv.rows(), xv.cols());
                    for (k, &src) in index.iter().enumerate() {
                        for (o, &v) in dx.row_mut(src).iter_mut().zip(g.row(k)) {
                            *o += v;
                        }
                    }
                    send(*x, dx, &mut grads);
                }
                Op::ScatterAdd(x, index) => send(*x, g.select_rows(index), &mut grads),
                Op::SegmentSoftmax(x, segment, num_segments) => {
                    let d = y.cols();
                    let mut dot = Matrix::zeros(*num_segments, d);
                    for (k, &s) in segment.iter().enumerate() {
                        for j in 0..d {
                            dot[(s, j)] += y[(k, j)] * g[(k, j)];
                        }
                    }
                    let mut dx = Matrix::zeros(y.rows(), d);
                    for (k, &s) in segment.iter().enumerate() {
                        for j in 0..d {
                            dx[(k, j)] = y[(k, j)] * (g[(k, j)] - dot[(s, j)]);
                        }
                    }
                    send(*x, dx, &mut grads);
                }
                Op::ConcatCols(a, b) => {
                    let ca = self.value(*a).cols();
                    let mut da = Matrix::zeros(g.rows(), ca);
                    let mut db = Matrix::zeros(g.rows(), g.cols() - ca);
                    for k in 0..g.rows() {
                        da.row_mut(k).copy_from_slice(&g.row(k)[..ca]);
                        db.row_mut(k).copy_from_slice(&g.row(k)[ca..]);
                    }
                    send(*a, da, &mut grads);
                    send(*b, db, &mut grads);
                }
                Op::Relu(x) => send(
                    *x,
                    g.zip_map(self.value(*x), |d, v| if v > 0.0 { d } else { 0.0 }),
                    &mut grads,
                ),
                Op::Elu(x) => send(
                    *x,
                    g.zip_map(self.value(*x), |d, v| if v > 0.0 { d } else { d * v.exp() }),
                    &mut grads,
                ),
                Op::LeakyRelu(x, slope) => send(
                    *x,
                    g.zip_map(self.value(*x), |d, v| if v > 0.0 { d } else { d * slope }),
                    &mut grads,
                ),
                Op::SoftmaxRows(x) => {
                    let mut dx = Matrix::zeros(y.rows(), y.cols());
                    for k in 0..y.rows() {
                        let dot: f64 = y.row(k).iter().zip(g.row(k)).map(|(a, b)| a * b).sum();
                        for j in 0..y.cols() {
                            dx[(k, j)] = y[(k, j)] * (g[(k, j)] - dot);
                        }
                    }
                    send(*x, dx, &mut grads);
                }
                Op::LogSoftmaxRows(x) => {
                    let mut dx = Matrix::zeros(y.rows(), y.cols());
                    for k in 0..y.rows() {
                        let total: f64 = g.row(k).iter().sum();
                        for j in 0..y.cols() {
                            dx[(k, j)] = g[(k, j)] - y[(k, j)].exp() * total;
                        }
                    }
                    send(*x, dx, &mut grads);
                }
                Op::Dropout(x, mask) => send(*x, g.zip_map(mask, |a, m| a * m), &mut grads),
                Op::Mean(x) => {
                    let (r, c) = self.value(*x).shape();
                    send(
                        *x,
                        Matrix::filled(r, c, g[(0, 0)] / (r * c) as f64),
                        &mut grads,
                    );
                }
                Op::BceWithLogits(x, targets) => {
                    let xv = self.value(*x);
                    let scale = g[(0, 0)] / xv.as_slice().len() as f64;
                    send(
                        *x,
                        xv.zip_map(targets, |v, t| (sigmoid(v) - t) * scale),
                        &mut grads,
                    );
                }
                Op::Mse(x, targets) => {
                    let xv = self.value(*x);
                    let scale = 2.0 * g[(0, 0)] / xv.as_slice().len() as f64;
                    send(*x, xv.zip_map(targets, |v, t| (v - t) * scale), &mut grads);
                }
            }
        }
        Gradients(grads)
    }
}
