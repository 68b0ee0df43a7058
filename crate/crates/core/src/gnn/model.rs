//! Layer stacks, the linear-probe combination of two stacks, and input
//! feature handling.

use super::context::GraphContext;
use super::layers::{self, Input, LayerKind, LayerParams};
use super::tape::{Tape, Var};
use super::GnnError;
use crate::graph::Task;
use crate::matrix::{Csr, Matrix};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Architecture {
    Plain(LayerKind),
    /// Two independent stacks joined by a linear layer.
    Lp(LayerKind, LayerKind),
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Plain(k) => write!(f, "{k}"),
            Architecture::Lp(a, b) => write!(f, "lp:{a}+{b}"),
        }
    }
}

impl FromStr for Architecture {
    type Err = GnnError;

    /// `gcn`, `hyperconv`, ... or `lp:<first>+<second>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.strip_prefix("lp:").or_else(|| s.strip_prefix("LP:")) {
            Some(rest) => {
                let (a, b) = rest.split_once('+').ok_or_else(|| {
                    GnnError::Spec(format!("expected lp:<model>+<model>, got `{s}`"))
                })?;
                Ok(Architecture::Lp(a.parse()?, b.parse()?))
            }
            None => Ok(Architecture::Plain(s.parse()?)),
        }
    }
}

impl Serialize for Architecture {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Architecture {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub dropout: f64,
    pub output_dim: usize,
    pub bias: bool,
}

impl ModelSpec {
    /// Two layers, 32 hidden units, dropout 0.5, with bias.
    pub fn new(architecture: Architecture, output_dim: usize) -> Self {
        ModelSpec {
            architecture,
            num_layers: 2,
            hidden_dim: 32,
            dropout: 0.5,
            output_dim,
            bias: true,
        }
    }

    /// Output width matching `task`: one column per class, or one value.
    pub fn for_task(architecture: Architecture, task: Task) -> Self {
        Self::new(architecture, output_dim_for(task))
    }

    pub fn check(&self) -> Result<(), GnnError> {
        if self.num_layers == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err(GnnError::Spec(
                "layer count and dimensions must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(GnnError::Spec(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

pub fn output_dim_for(task: Task) -> usize {
    match task {
        Task::Classification { num_classes } => num_classes,
        Task::Regression => 1,
    }
}

/// Node features as handed to the first layer.
#[derive(Clone, Debug)]
pub enum Features {
    Dense(Matrix),
    Sparse(Arc<Csr>),
}

impl Features {
    /// Stores `x` sparsely when at most a quarter of it is nonzero.
    pub fn new(x: &Matrix) -> Self {
        let nnz = x.as_slice().iter().filter(|&&v| v != 0.0).count();
        if nnz * 4 <= x.as_slice().len() {
            Features::Sparse(Arc::new(Csr::from_dense(x)))
        } else {
            Features::Dense(x.clone())
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Features::Dense(m) => m.rows(),
            Features::Sparse(s) => s.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Features::Dense(m) => m.cols(),
            Features::Sparse(s) => s.cols(),
        }
    }

    fn to_input<R: Rng + ?Sized>(&self, tape: &mut Tape, dropout: Option<(f64, &mut R)>) -> Input {
        match (self, dropout) {
            (Features::Dense(m), None) => Input::Dense(tape.constant(m.clone())),
            (Features::Dense(m), Some((p, rng))) => {
                let mask = dropout_mask(m.rows(), m.cols(), p, rng);
                Input::Dense(tape.constant(m.zip_map(&mask, |v, k| v * k)))
            }
            (Features::Sparse(s), None) => Input::Sparse(Arc::clone(s)),
            (Features::Sparse(s), Some((p, rng))) => {
                let keep = 1.0 / (1.0 - p);
                let rng = &mut *rng;
                Input::Sparse(Arc::new(s.map_values(|_, _, v| {
                    if rng.gen::<f64>() < p {
                        0.0
                    } else {
                        v * keep
                    }
                })))
            }
        }
    }
}

fn dropout_mask<R: Rng + ?Sized>(rows: usize, cols: usize, p: f64, rng: &mut R) -> Matrix {
    let keep = 1.0 / (1.0 - p);
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
            .collect(),
    )
}

/// The linear layer `concat(h1, h2) θ + b` over two stacks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub theta: Matrix,
    pub bias: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub spec: ModelSpec,
    pub input_dim: usize,
    pub task: Task,
    /// One stack, or two for a linear-probe model.
    pub stacks: Vec<Vec<LayerParams>>,
    pub head: Option<LinearHead>,
}

fn stack<R: Rng + ?Sized>(
    kind: LayerKind,
    dims: &[usize],
    bias: bool,
    rng: &mut R,
) -> Vec<LayerParams> {
    dims.windows(2)
        .map(|w| LayerParams::glorot(kind, w[0], w[1], bias, rng))
        .collect()
}

impl Model {
    pub fn init<R: Rng + ?Sized>(
        spec: &ModelSpec,
        input_dim: usize,
        task: Task,
        rng: &mut R,
    ) -> Result<Self, GnnError> {
        spec.check()?;
        if input_dim == 0 {
            return Err(GnnError::Spec("input dimension must be positive".into()));
        }
        if spec.output_dim != output_dim_for(task) {
            return Err(GnnError::Spec(format!(
                "output_dim {} does not fit a {} task with {} output(s)",
                spec.output_dim,
                task.name(),
                output_dim_for(task)
            )));
        }
        let hidden = spec.hidden_dim;
        let dims = |last: usize| {
            let mut d = vec![input_dim];
            d.extend(std::iter::repeat(hidden).take(spec.num_layers - 1));
            d.push(last);
            d
        };
        let (stacks, head) = match spec.architecture {
            Architecture::Plain(k) => {
                (vec![stack(k, &dims(spec.output_dim), spec.bias, rng)], None)
            }
            Architecture::Lp(a, b) => {
                let s1 = stack(a, &dims(hidden), spec.bias, rng);
                let s2 = stack(b, &dims(hidden), spec.bias, rng);
                let head = LinearHead {
                    theta: layers::glorot(2 * hidden, spec.output_dim, rng),
                    bias: Matrix::zeros(1, spec.output_dim),
                };
                (vec![s1, s2], Some(head))
            }
        };
        Ok(Model {
            spec: spec.clone(),
            input_dim,
            task,
            stacks,
            head,
        })
    }

    pub fn check(&self) -> Result<(), GnnError> {
        self.spec.check()?;
        for s in &self.stacks {
            let mut dim = self.input_dim;
            for p in s {
                p.check()?;
                if p.input_dim() != dim {
                    return Err(GnnError::shape(
                        "theta",
                        (dim, p.output_dim()),
                        p.theta.shape(),
                    ));
                }
                dim = p.output_dim();
            }
        }
        Ok(())
    }

    pub fn matrices(&self) -> Vec<&Matrix> {
        let mut out: Vec<&Matrix> = self
            .stacks
            .iter()
            .flatten()
            .flat_map(LayerParams::matrices)
            .collect();
        if let Some(h) = &self.head {
            out.push(&h.theta);
            out.push(&h.bias);
        }
        out
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = self
            .stacks
            .iter_mut()
            .flatten()
            .flat_map(LayerParams::matrices_mut)
            .collect();
        if let Some(h) = &mut self.head {
            out.push(&mut h.theta);
            out.push(&mut h.bias);
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.matrices().iter().map(|m| m.rows() * m.cols()).sum()
    }

    /// Records a forward pass. Returns the output and the parameter handles
    /// in the order of [`Model::matrices`]. Dropout is applied only when
    /// `rng` is given.
    pub(crate) fn forward<R: Rng + ?Sized>(
        &self,
        tape: &mut Tape,
        ctx: &GraphContext,
        x: &Features,
        mut rng: Option<&mut R>,
    ) -> (Var, Vec<Var>) {
        let p = self.spec.dropout;
        let mut params = Vec::new();
        let mut outs = Vec::new();
        for s in &self.stacks {
            let drop = rng.as_deref_mut().filter(|_| p > 0.0).map(|r| (p, r));
            let mut h = x.to_input(tape, drop);
            let last = s.len() - 1;
            for (i, layer) in s.iter().enumerate() {
                if i > 0 {
                    if let (Some(r), true) = (rng.as_deref_mut(), p > 0.0) {
                        let Input::Dense(v) = h else {
                            unreachable!("hidden layers are dense")
                        };
                        let (rows, cols) = tape.value(v).shape();
                        let mask = dropout_mask(rows, cols, p, r);
                        h = Input::Dense(tape.dropout(v, mask));
                    }
                }
                let vars = layer.register(tape);
                params.extend(vars.vars());
                let mut out = layers::forward(tape, layer, &vars, ctx, &h);
                if i < last {
                    out = tape.relu(out);
                }
                h = Input::Dense(out);
            }
            let Input::Dense(v) = h else { unreachable!() };
            outs.push(v);
        }
        let out = match &self.head {
            None => outs[0],
            Some(head) => {
                let theta = tape.param(head.theta.clone());
                let bias = tape.param(head.bias.clone());
                params.push(theta);
                params.push(bias);
                let cat = tape.concat_cols(outs[0], outs[1]);
                let y = tape.matmul(cat, theta);
                let y = tape.add_row(y, bias);
                match self.task {
                    Task::Classification { .. } => tape.log_softmax_rows(y),
                    Task::Regression => y,
                }
            }
        };
        (out, params)
    }

    /// Output rows for every node, dropout off.
    pub fn predict(&self, ctx: &GraphContext, x: &Features) -> Result<Matrix, GnnError> {
        if x.cols() != self.input_dim {
            return Err(GnnError::shape(
                "features",
                (ctx.num_nodes(), self.input_dim),
                (x.rows(), x.cols()),
            ));
        }
        if x.rows() != ctx.num_nodes() {
            return Err(GnnError::LengthMismatch {
                what: "feature rows",
                expected: ctx.num_nodes(),
                found: x.rows(),
            });
        }
        let mut tape = Tape::new();
        let (out, _) = self.forward::<rand_chacha::ChaCha8Rng>(&mut tape, ctx, x, None);
        Ok(tape.value(out).clone())
    }

    /// Training loss on `rows` against `targets` and its gradient for every
    /// matrix in [`Model::matrices`] order, dropout off.
    pub fn loss_gradients(
        &self,
        ctx: &GraphContext,
        x: &Features,
        rows: &[usize],
        targets: &Matrix,
    ) -> Result<(f64, Vec<Matrix>), GnnError> {
        if targets.shape() != (rows.len(), self.spec.output_dim) {
            return Err(GnnError::shape(
                "targets",
                (rows.len(), self.spec.output_dim),
                targets.shape(),
            ));
        }
        let mut tape = Tape::new();
        let (out, params) = self.forward::<rand_chacha::ChaCha8Rng>(&mut tape, ctx, x, None);
        let picked = tape.gather(out, Arc::new(rows.to_vec()));
        let loss = match self.task {
            Task::Classification { .. } => tape.bce_with_logits(picked, Arc::new(targets.clone())),
            Task::Regression => tape.mse(picked, Arc::new(targets.clone())),
        };
        let mut grads = tape.backward(loss);
        let out = params
            .iter()
            .map(|&p| {
                grads
                    .take(p)
                    .unwrap_or_else(|| Matrix::zeros(tape.value(p).rows(), tape.value(p).cols()))
            })
            .collect();
        Ok((tape.value(loss)[(0, 0)], out))
    }

    /// Output of stack `i` alone, before the linear head.
    pub fn stack_output(
        &self,
        i: usize,
        ctx: &GraphContext,
        x: &Matrix,
    ) -> Result<Matrix, GnnError> {
        let s = self
            .stacks
            .get(i)
            .ok_or_else(|| GnnError::Spec(format!("no stack {i}")))?;
        let mut h = x.clone();
        for (j, layer) in s.iter().enumerate() {
            h = layers::apply_layer(&h, ctx, layer)?;
            if j + 1 < s.len() {
                h = h.map(|v| if v < 0.0 { 0.0 } else { v });
            }
        }
        Ok(h)
    }
}

/// The linear head on its own: `concat(out1, out2) θ + b`, followed by a
/// row-wise log-softmax for classification.
pub fn lp_gnn_forward(
    out1: &Matrix,
    out2: &Matrix,
    theta: &Matrix,
    b: &Matrix,
    task: Task,
) -> Result<Matrix, GnnError> {
    if out1.rows() != out2.rows() {
        return Err(GnnError::LengthMismatch {
            what: "inner output rows",
            expected: out1.rows(),
            found: out2.rows(),
        });
    }
    let width = out1.cols() + out2.cols();
    if theta.rows() != width {
        return Err(GnnError::shape(
            "theta",
            (width, theta.cols()),
            theta.shape(),
        ));
    }
    if b.shape() != (1, theta.cols()) {
        return Err(GnnError::shape("b", (1, theta.cols()), b.shape()));
    }
    let mut tape = Tape::new();
    let c = tape.constant(out1.hcat(out2));
    let t = tape.constant(theta.clone());
    let bv = tape.constant(b.clone());
    let y = tape.matmul(c, t);
    let mut y = tape.add_row(y, bv);
    if let Task::Classification { .. } = task {
        y = tape.log_softmax_rows(y);
    }
    Ok(tape.value(y).clone())
}
