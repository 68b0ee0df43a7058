use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "hgb",
    version,
    about = "Hybrid graphs: dataset conversion, hyperedge builders, samplers, statistics and GNN baselines",
    args_override_self = true,
    after_help = "Relative dataset paths that do not exist are looked up under $HGB_DATA_DIR.\n\
                  Exit status: 0 success, 1 runtime error, 2 usage error."
)]
pub struct Cli {
    /// TOML file with default flag values. Top-level keys apply to any
    /// command that has the flag, `[command]` tables to one command.
    /// Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print node, edge and hyperedge counts, average degrees and clustering.
    Stats(StatsArgs),
    /// Convert between the JSON dataset format and raw edge lists or MUSAE files.
    Convert(ConvertArgs),
    /// Write the seeded 6:2:2 train/validation/test split.
    Split(SplitArgs),
    /// Replace a dataset's hyperedges with cliques, genomic intervals or embedding balls.
    BuildHyperedges(BuildArgs),
    /// Draw one subgraph with a sampler.
    Sample(SampleArgs),
    /// Average subgraph statistics over repeated sampler runs.
    SamplerReport(SamplerReportArgs),
    /// Train a model over several seeds and report the test metric.
    Train(TrainArgs),
    /// Score models saved by `train --save-model`.
    Eval(EvalArgs),
    /// Run every (dataset, model) pair of a manifest.
    Suite(SuiteArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stats(_) => "stats",
            Command::Convert(_) => "convert",
            Command::Split(_) => "split",
            Command::BuildHyperedges(_) => "build-hyperedges",
            Command::Sample(_) => "sample",
            Command::SamplerReport(_) => "sampler-report",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Suite(_) => "suite",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Table,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Counting {
    Undirected,
    BothDirections,
}

impl From<Counting> for hgb::stats::EdgeCounting {
    fn from(c: Counting) -> Self {
        match c {
            Counting::Undirected => hgb::stats::EdgeCounting::Undirected,
            Counting::BothDirections => hgb::stats::EdgeCounting::BothDirections,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct StatsArgs {
    /// Dataset file.
    #[arg(value_name = "FILE")]
    pub file: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    /// How edges are counted. Published tables count each undirected edge
    /// once per direction.
    #[arg(long, value_enum, default_value = "both-directions")]
    pub edge_counting: Counting,
    /// Also write the JSON report here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    Json,
    EdgeList,
    Musae,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Simple,
    Hypergraph,
    TwoLevel,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Classes,
    Values,
}

#[derive(Args, Debug, Serialize)]
pub struct ConvertArgs {
    /// Input: a dataset JSON, an edge list, or a MUSAE edge CSV.
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Input format; guessed from the extension and `--target` when absent.
    #[arg(long, value_enum)]
    pub from: Option<InputKind>,
    /// Rewrite the graph as a simple graph, a flat hypergraph, or a
    /// two-level hierarchy with one virtual node per hyperedge.
    #[arg(long, value_enum)]
    pub to: Option<Transform>,
    /// Dataset name; defaults to the input file stem.
    #[arg(long)]
    pub name: Option<String>,
    /// MUSAE target CSV.
    #[arg(long, value_name = "FILE")]
    pub target: Option<PathBuf>,
    /// MUSAE features JSON.
    #[arg(long, value_name = "FILE")]
    pub features: Option<PathBuf>,
    #[arg(long, default_value = "id")]
    pub id_column: String,
    #[arg(long, default_value = "target")]
    pub target_column: String,
    #[arg(long, value_enum, default_value = "classes")]
    pub target_kind: TargetKind,
}

#[derive(Args, Debug, Serialize)]
pub struct SplitArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Clique,
    Interval,
    Ball,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    Euclidean,
    Cosine,
}

#[derive(Args, Debug, Serialize)]
pub struct BuildArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Smallest clique kept.
    #[arg(long, default_value_t = 3)]
    pub min_size: usize,
    /// Interval half-width in base pairs (default 200000), or the ball radius.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub metric: MetricArg,
    /// Write the dataset with its new hyperedges here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Node,
    Edge,
    Rw,
    RandNode,
    RandHyperedge,
}

/// Sampler flags shared by `sample` and `sampler-report`.
#[derive(Args, Debug, Serialize)]
pub struct SamplerArgs {
    #[arg(long, value_enum)]
    pub method: SamplerKind,
    /// Target subgraph size in nodes. The edge sampler draws `budget / 2`
    /// edges and the walk sampler `budget / (walk_length + 1)` roots; for
    /// `rand-hyperedge` it counts hyperedges.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Walk roots, overriding the count derived from `--budget`.
    #[arg(long)]
    pub roots: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub walk_length: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SampleArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the sampled subgraph as a dataset file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SamplerReportArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Trial `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "both-directions")]
    pub edge_counting: Counting,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SaintKind {
    Node,
    Edge,
    Rw,
}

/// Model and optimizer settings shared by `train` and suite manifests.
#[derive(Args, Clone, Debug, Serialize)]
pub struct ProtocolArgs {
    /// `gcn`, `sage`, `gat`, `gatv2`, `hyperconv`, `hyperatten` or `lp:<a>+<b>`.
    #[arg(long, default_value = "gcn")]
    pub model: String,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.5)]
    pub dropout: f64,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// Subgraph sampler for minibatch training.
    #[arg(long, value_enum)]
    pub saint: Option<SaintKind>,
    /// Subgraph size in nodes for `--saint`.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Subgraphs per epoch for `--saint`.
    #[arg(long, default_value_t = 5)]
    pub batch: usize,
    #[arg(long, default_value_t = 2)]
    pub walk_length: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub protocol: ProtocolArgs,
    /// First model seed; seeds `seed .. seed + seeds` are run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Save the trained models for `eval`.
    #[arg(long, value_name = "FILE")]
    pub save_model: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskArg {
    Train,
    Val,
    Test,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    /// File written by `train --save-model`.
    #[arg(long, value_name = "FILE")]
    pub model_file: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    /// Defaults to the split seed used in training.
    #[arg(long)]
    pub split_seed: Option<u64>,
    #[arg(long, value_enum, default_value = "test")]
    pub mask: MaskArg,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SuiteArgs {
    /// Manifest TOML.
    #[arg(value_name = "MANIFEST")]
    pub manifest: PathBuf,
    /// Directory for relative dataset paths; overrides the manifest and $HGB_DATA_DIR.
    #[arg(long, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}
