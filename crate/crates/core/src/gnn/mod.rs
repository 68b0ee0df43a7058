//! Graph neural networks on hybrid graphs.
//!
//! Six layer families ([`LayerKind`]) run on a small reverse-mode engine
//! ([`tape`]). A [`Model`] stacks layers with ReLU between them and dropout
//! before each; the linear-probe architecture joins two stacks with a
//! linear layer. [`train`] runs the multi-seed protocol and returns a
//! [`TrainReport`].
//!
//! Classification trains against one-hot targets with binary cross-entropy
//! on the raw outputs and is scored by argmax accuracy. Regression uses MSE.
//!
//! ```
//! use hgb::datasets::two_blobs;
//! use hgb::gnn::{train, Architecture, LayerKind, ModelSpec, TrainConfig};
//! use hgb::io::split;
//!
//! let g = two_blobs(&Default::default(), 7);
//! let masks = split(g.num_nodes(), 0).unwrap();
//! let spec = ModelSpec::for_task(Architecture::Plain(LayerKind::Gcn), g.task());
//! let cfg = TrainConfig { seeds: 2, ..TrainConfig::default() };
//! let report = train(&g, &masks, &spec, &cfg).unwrap();
//! assert_eq!(report.values.len(), 2);
//! assert!(report.mean > 0.9);
//! ```

mod context;
pub mod layers;
pub mod model;
pub mod tape;
pub mod train;

use thiserror::Error;

pub use context::GraphContext;
pub use layers::{
    apply_layer, attention_coefficients, gat_layer, gatv2_layer, gcn_layer, hyperatten_layer,
    hyperconv_layer, record, sage_layer, Input, LayerKind, LayerParams,
};
pub use model::{lp_gnn_forward, Architecture, Features, LinearHead, Model, ModelSpec};
pub use train::{
    bce_with_logits, cosine_lr, evaluate, mse, random_guess, train, train_runs, train_seed, Adam,
    MetricKind, SaintConfig, SeedFailure, SeedRun, TrainConfig, TrainReport,
};

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("{what}: expected shape {expected:?}, found {found:?}")]
    Shape {
        what: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("node {node} is out of range for {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("mask is empty")]
    EmptyMask,
    #[error("invalid model or training setting: {0}")]
    Spec(String),
    #[error("seed {seed}: loss became {loss} at epoch {epoch}")]
    NonFiniteLoss { seed: u64, epoch: usize, loss: f64 },
    #[error("every seed failed; first failure: {0}")]
    AllSeedsFailed(String),
    #[error(transparent)]
    Sample(#[from] crate::sample::SampleError),
}

impl GnnError {
    pub(crate) fn shape(what: &str, expected: (usize, usize), found: (usize, usize)) -> Self {
        GnnError::Shape {
            what: what.to_owned(),
            expected,
            found,
        }
    }
}
