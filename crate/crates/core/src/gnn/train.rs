//! Losses, the optimizer, and the multi-seed training protocol.

use super::context::GraphContext;
use super::model::{Features, Model, ModelSpec};
use super::tape::{bce_with_logits_elem, Tape};
use super::GnnError;
use crate::graph::{HybridGraph, Labels, Task};
use crate::io::SplitMasks;
use crate::matrix::Matrix;
use crate::sample::Sampler;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Mean binary cross-entropy between targets and raw scores.
pub fn bce_with_logits(y_true: &[f64], y_raw: &[f64]) -> Result<f64, GnnError> {
    if y_true.len() != y_raw.len() {
        return Err(GnnError::LengthMismatch {
            what: "scores",
            expected: y_true.len(),
            found: y_raw.len(),
        });
    }
    if y_true.is_empty() {
        return Err(GnnError::EmptyMask);
    }
    let total: f64 = y_true
        .iter()
        .zip(y_raw)
        .map(|(&t, &x)| bce_with_logits_elem(x, t))
        .sum();
    Ok(total / y_true.len() as f64)
}

pub fn mse(y_true: &[f64], y_pred: &[f64]) -> Result<f64, GnnError> {
    if y_true.len() != y_pred.len() {
        return Err(GnnError::LengthMismatch {
            what: "predictions",
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(GnnError::EmptyMask);
    }
    Ok(y_true
        .iter()
        .zip(y_pred)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y_true.len() as f64)
}

/// Accuracy of always guessing one class out of `num_classes`.
pub fn random_guess(num_classes: usize) -> f64 {
    1.0 / num_classes as f64
}

/// Step size for epoch `t` of `total`: `lr (1 + cos(pi t / total)) / 2`.
pub fn cosine_lr(lr: f64, t: usize, total: usize) -> f64 {
    lr * (1.0 + (std::f64::consts::PI * t as f64 / total as f64).cos()) / 2.0
}

#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: i32,
}

impl Adam {
    pub fn new(shapes: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let (m, v) = shapes
            .into_iter()
            .map(|(r, c)| (Matrix::zeros(r, c), Matrix::zeros(r, c)))
            .unzip();
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m,
            v,
            t: 0,
        }
    }

    /// One update; a missing gradient counts as zero.
    pub fn step(&mut self, params: Vec<&mut Matrix>, grads: &[Option<Matrix>], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (k, p) in params.into_iter().enumerate() {
            let (m, v) = (self.m[k].as_mut_slice(), self.v[k].as_mut_slice());
            let g = grads[k].as_ref().map(Matrix::as_slice);
            for (i, w) in p.as_mut_slice().iter_mut().enumerate() {
                let gi = g.map_or(0.0, |g| g[i]);
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                *w -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// Subgraph-batched training: `batch` sampled subgraphs per epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaintConfig {
    pub sampler: Sampler,
    pub batch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seeds: usize,
    /// Seeds used are `first_seed .. first_seed + seeds`.
    pub first_seed: u64,
    pub split_seed: u64,
    pub saint: Option<SaintConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 50,
            seeds: 5,
            first_seed: 0,
            split_seed: 0,
            saint: None,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<(), GnnError> {
        if self.epochs == 0 || self.seeds == 0 {
            return Err(GnnError::Spec("epochs and seeds must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(GnnError::Spec(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if matches!(&self.saint, Some(s) if s.batch == 0) {
            return Err(GnnError::Spec("batch must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Accuracy,
    Mse,
}

impl MetricKind {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Classification { .. } => MetricKind::Accuracy,
            Task::Regression => MetricKind::Mse,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub epoch: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: String,
    pub metric: MetricKind,
    /// Seeds that finished, in order, with their test metric in `values`.
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of `values`.
    pub std: f64,
    /// Mean training loss per epoch, one curve per finished seed.
    pub loss_curves: Vec<Vec<f64>>,
    pub failures: Vec<SeedFailure>,
}

impl TrainReport {
    /// `mean ± std` to three decimals.
    pub fn table_row(&self) -> String {
        format!("{:.3} ± {:.3}", self.mean, self.std)
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// A trained model with its loss curve and test metric.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub model: Model,
    pub losses: Vec<f64>,
    pub test_metric: f64,
}

fn check_mask(mask: &[usize], n: usize) -> Result<(), GnnError> {
    if mask.is_empty() {
        return Err(GnnError::EmptyMask);
    }
    match mask.iter().find(|&&v| v >= n) {
        Some(&v) => Err(GnnError::NodeOutOfRange {
            node: v,
            num_nodes: n,
        }),
        None => Ok(()),
    }
}

fn targets(labels: &Labels, rows: &[usize]) -> Matrix {
    match labels {
        Labels::Classes {
            values,
            num_classes,
        } => {
            let mut t = Matrix::zeros(rows.len(), *num_classes);
            for (i, &v) in rows.iter().enumerate() {
                t[(i, values[v])] = 1.0;
            }
            t
        }
        Labels::Values(v) => Matrix::column(&rows.iter().map(|&i| v[i]).collect::<Vec<_>>()),
    }
}

/// Accuracy (argmax) or MSE of `pred` on the rows in `mask`.
pub fn metric(pred: &Matrix, labels: &Labels, mask: &[usize]) -> Result<f64, GnnError> {
    check_mask(mask, pred.rows())?;
    match labels {
        Labels::Classes { values, .. } => {
            let arg = pred.select_rows(mask).argmax_rows();
            let hits = mask
                .iter()
                .zip(&arg)
                .filter(|(&v, &a)| values[v] == a)
                .count();
            Ok(hits as f64 / mask.len() as f64)
        }
        Labels::Values(v) => {
            let truth: Vec<f64> = mask.iter().map(|&i| v[i]).collect();
            let guess: Vec<f64> = mask.iter().map(|&i| pred[(i, 0)]).collect();
            mse(&truth, &guess)
        }
    }
}

/// Metric of `model` on `g` over the nodes in `mask`, dropout off.
pub fn evaluate(model: &Model, g: &HybridGraph, mask: &[usize]) -> Result<f64, GnnError> {
    check_mask(mask, g.num_nodes())?;
    let pred = model.predict(
        &GraphContext::from_graph(g),
        &Features::new(&g.node_features),
    )?;
    metric(&pred, &g.labels, mask)
}

struct Batch<'a> {
    ctx: &'a GraphContext,
    features: &'a Features,
    rows: Arc<Vec<usize>>,
    targets: Arc<Matrix>,
}

fn step(
    model: &mut Model,
    adam: &mut Adam,
    batch: &Batch<'_>,
    lr: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut tape = Tape::new();
    let (out, params) = model.forward(&mut tape, batch.ctx, batch.features, Some(rng));
    let rows = tape.gather(out, Arc::clone(&batch.rows));
    let loss = match model.task {
        Task::Classification { .. } => tape.bce_with_logits(rows, Arc::clone(&batch.targets)),
        Task::Regression => tape.mse(rows, Arc::clone(&batch.targets)),
    };
    let value = tape.value(loss)[(0, 0)];
    if !value.is_finite() {
        return value;
    }
    let mut grads = tape.backward(loss);
    let grads: Vec<Option<Matrix>> = params.iter().map(|&p| grads.take(p)).collect();
    adam.step(model.matrices_mut(), &grads, lr);
    value
}

/// Trains one seed and scores it on `masks.test`.
pub fn train_seed(
    g: &HybridGraph,
    masks: &SplitMasks,
    spec: &ModelSpec,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<SeedRun, GnnError> {
    cfg.check()?;
    let n = g.num_nodes();
    check_mask(&masks.train, n)?;
    check_mask(&masks.test, n)?;
    let ctx = GraphContext::from_graph(g);
    let features = Features::new(&g.node_features);
    train_seed_with(g, masks, spec, cfg, seed, &ctx, &features)
}

fn train_seed_with(
    g: &HybridGraph,
    masks: &SplitMasks,
    spec: &ModelSpec,
    cfg: &TrainConfig,
    seed: u64,
    ctx: &GraphContext,
    features: &Features,
) -> Result<SeedRun, GnnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Model::init(spec, g.node_features.cols(), g.task(), &mut rng)?;
    let mut adam = Adam::new(model.matrices().iter().map(|m| m.shape()));
    let full = Batch {
        ctx,
        features,
        rows: Arc::new(masks.train.clone()),
        targets: Arc::new(targets(&g.labels, &masks.train)),
    };
    let mut in_train = vec![false; g.num_nodes()];
    masks.train.iter().for_each(|&v| in_train[v] = true);

    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cosine_lr(cfg.learning_rate, epoch, cfg.epochs);
        let loss = match &cfg.saint {
            None => step(&mut model, &mut adam, &full, lr, &mut rng),
            Some(saint) => {
                let (mut total, mut steps) = (0.0, 0usize);
                for _ in 0..saint.batch {
                    let sub = saint.sampler.sample(g, &mut rng)?;
                    let rows: Vec<usize> = (0..sub.num_nodes())
                        .filter(|&i| in_train[sub.node_ids[i]])
                        .collect();
                    if rows.is_empty() {
                        continue;
                    }
                    let sub_ctx = GraphContext::new(
                        sub.num_nodes(),
                        &sub.edges,
                        &sub.hyperedges,
                        &sub.hyperedge_weights,
                    );
                    let sub_features = Features::new(&sub.node_features);
                    let batch = Batch {
                        ctx: &sub_ctx,
                        features: &sub_features,
                        targets: Arc::new(targets(&sub.labels, &rows)),
                        rows: Arc::new(rows),
                    };
                    let l = step(&mut model, &mut adam, &batch, lr, &mut rng);
                    total += l;
                    steps += 1;
                    if !l.is_finite() {
                        break;
                    }
                }
                if steps == 0 {
                    0.0
                } else {
                    total / steps as f64
                }
            }
        };
        if !loss.is_finite() {
            return Err(GnnError::NonFiniteLoss { seed, epoch, loss });
        }
        losses.push(loss);
    }
    let pred = model.predict(ctx, features)?;
    let test_metric = metric(&pred, &g.labels, &masks.test)?;
    Ok(SeedRun {
        seed,
        model,
        losses,
        test_metric,
    })
}

/// Trains `cfg.seeds` independent models and reports their test metrics.
/// A seed whose loss turns non-finite is listed under `failures`.
pub fn train(
    g: &HybridGraph,
    masks: &SplitMasks,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainReport, GnnError> {
    train_runs(g, masks, spec, cfg).map(|(report, _)| report)
}

/// Like [`train`], also returning the trained models.
pub fn train_runs(
    g: &HybridGraph,
    masks: &SplitMasks,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<(TrainReport, Vec<SeedRun>), GnnError> {
    cfg.check()?;
    spec.check()?;
    let n = g.num_nodes();
    check_mask(&masks.train, n)?;
    check_mask(&masks.test, n)?;
    let ctx = GraphContext::from_graph(g);
    let features = Features::new(&g.node_features);
    let seeds: Vec<u64> = (0..cfg.seeds as u64).map(|i| cfg.first_seed + i).collect();
    let results: Vec<Result<SeedRun, GnnError>> = seeds
        .par_iter()
        .map(|&s| train_seed_with(g, masks, spec, cfg, s, &ctx, &features))
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(GnnError::NonFiniteLoss { seed, epoch, loss }) => failures.push(SeedFailure {
                seed,
                epoch,
                message: format!("loss became {loss} at epoch {epoch}"),
            }),
            Err(e) => return Err(e),
        }
    }
    if runs.is_empty() {
        let f = &failures[0];
        return Err(GnnError::AllSeedsFailed(format!(
            "seed {}: {}",
            f.seed, f.message
        )));
    }
    let values: Vec<f64> = runs.iter().map(|r| r.test_metric).collect();
    let (mean, std) = mean_std(&values);
    let report = TrainReport {
        model: spec.architecture.to_string(),
        metric: MetricKind::for_task(g.task()),
        seeds: runs.iter().map(|r| r.seed).collect(),
        values,
        mean,
        std,
        loss_curves: runs.iter().map(|r| r.losses.clone()).collect(),
        failures,
    };
    Ok((report, runs))
}
