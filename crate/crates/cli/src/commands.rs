use crate::args::*;
use crate::report::{kv_table, load_dataset, resolve, Report, TOOL, VERSION};
use crate::{Session, UsageError};
use anyhow::{bail, Context, Result};
use hgb::construct::{
    ball_hyperedges, cliques_to_hyperedges, interval_hyperedges, Metric, DEFAULT_INTERVAL_BP,
};
use hgb::gnn::train::mean_std;
use hgb::gnn::{
    evaluate, random_guess, train_runs, Architecture, Model, ModelSpec, SaintConfig, TrainConfig,
    TrainReport,
};
use hgb::graph::Task;
use hgb::io::{
    load_dataset as load_plain, musae, save_dataset, split, split_sizes, Dataset, SplitMasks,
};
use hgb::sample::Sampler;
use hgb::stats::{compute_stats, compute_stats_counting, sampler_report, GraphStats};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Prints the report as JSON or as `table`, and writes the JSON to `out`.
fn emit(
    s: &mut Session<'_>,
    format: Format,
    json: &str,
    table: impl FnOnce() -> String,
    out: Option<&Path>,
) -> Result<()> {
    match format {
        Format::Json => s.print(json)?,
        Format::Table => s.print(&table())?,
    }
    if let Some(path) = out {
        write_file(path, json)?;
    }
    Ok(())
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

fn stats_rows(st: &GraphStats) -> Vec<(&'static str, String)> {
    vec![
        ("num_nodes", st.num_nodes.to_string()),
        ("num_edges", st.num_edges.to_string()),
        ("num_hyperedges", st.num_hyperedges.to_string()),
        ("avg_node_degree", f3(st.avg_node_degree)),
        ("avg_hyperedge_degree", f3(st.avg_hyperedge_degree)),
        ("avg_clustering_coef", f3(st.avg_clustering_coef)),
    ]
}

pub fn stats(a: &StatsArgs, s: &mut Session<'_>) -> Result<()> {
    s.announce(a, None)?;
    let (d, info) = load_dataset(&a.file, s.data_dir())?;
    let st = compute_stats_counting(&d.graph, a.edge_counting.into());
    let json = Report::new("stats", Some(&info), a, &st).to_json();
    emit(
        s,
        a.format,
        &json,
        || kv_table(&stats_rows(&st)),
        a.out.as_deref(),
    )
}

fn guess_kind(a: &ConvertArgs) -> InputKind {
    if let Some(k) = a.from {
        return k;
    }
    if a.target.is_some() {
        InputKind::Musae
    } else if a
        .input
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        InputKind::Json
    } else {
        InputKind::EdgeList
    }
}

pub fn convert(a: &ConvertArgs, s: &mut Session<'_>) -> Result<()> {
    s.announce(a, None)?;
    let input = resolve(&a.input, s.data_dir());
    let stem = a
        .input
        .file_stem()
        .map_or_else(String::new, |t| t.to_string_lossy().into_owned());
    let name = a.name.clone().unwrap_or(stem);
    let mut d = match guess_kind(a) {
        InputKind::Json => load_plain(&input)?,
        InputKind::EdgeList => musae::import_edge_list(&input, &name)?,
        InputKind::Musae => {
            let target = a
                .target
                .as_deref()
                .ok_or_else(|| usage("--from musae needs --target"))?;
            let target = resolve(target, s.data_dir());
            let features = a.features.as_deref().map(|f| resolve(f, s.data_dir()));
            musae::MusaeImport {
                name: &name,
                edges: &input,
                target: &target,
                features: features.as_deref(),
                id_column: &a.id_column,
                target_column: &a.target_column,
                target_kind: match a.target_kind {
                    TargetKind::Classes => musae::TargetKind::Classes,
                    TargetKind::Values => musae::TargetKind::Values,
                },
            }
            .run()?
        }
    };
    if a.name.is_some() || d.name.is_empty() {
        d.name = name;
    }
    match a.to {
        None => {}
        Some(Transform::Simple) => d.graph = d.graph.to_simple()?,
        Some(Transform::Hypergraph) => d.graph = d.graph.to_hypergraph()?,
        Some(Transform::TwoLevel) => {
            // Virtual nodes have no coordinates or embeddings.
            d.graph = d.graph.to_two_level_hierarchy()?;
            d.positions = None;
            d.embeddings = None;
        }
    }
    save_dataset(&d, &a.out)?;
    let g = &d.graph;
    s.print(&format!(
        "wrote {}: {} nodes, {} edges, {} hyperedges\n",
        a.out.display(),
        g.num_nodes(),
        g.num_edges(),
        g.num_hyperedges()
    ))
}

#[derive(Serialize)]
struct SplitResult<'a> {
    seed: u64,
    sizes: [usize; 3],
    masks: &'a SplitMasks,
}

pub fn split_cmd(a: &SplitArgs, s: &mut Session<'_>) -> Result<()> {
    s.announce(a, Some(a.seed))?;
    let (d, info) = load_dataset(&a.input, s.data_dir())?;
    let masks = split(d.graph.num_nodes(), a.seed)?;
    let (tr, va, te) = split_sizes(d.graph.num_nodes());
    let result = SplitResult {
        seed: a.seed,
        sizes: [tr, va, te],
        masks: &masks,
    };
    let json = Report::new("split", Some(&info), a, &result).to_json();
    match &a.out {
        Some(path) => {
            write_file(path, &json)?;
            s.print(&format!(
                "train {tr}, val {va}, test {te} -> {}\n",
                path.display()
            ))
        }
        None => s.print(&json),
    }
}

#[derive(Serialize)]
struct BuildResult {
    method: Method,
    num_hyperedges: usize,
    min_size: usize,
    max_size: usize,
    avg_hyperedge_degree: f64,
}

pub fn build_hyperedges(a: &BuildArgs, s: &mut Session<'_>) -> Result<()> {
    s.announce(a, None)?;
    let (mut d, info) = load_dataset(&a.input, s.data_dir())?;
    let n = d.graph.num_nodes();
    let hyperedges = match a.method {
        Method::Clique => {
            if a.min_size == 0 {
                return Err(usage("--min-size must be at least 1"));
            }
            cliques_to_hyperedges(&d.graph.simple_edges, n, a.min_size)
        }
        Method::Interval => {
            let t = a.threshold.unwrap_or(DEFAULT_INTERVAL_BP as f64);
            if !(t >= 0.0 && t.fract() == 0.0 && t <= u64::MAX as f64) {
                return Err(usage(format!(
                    "interval --threshold must be a whole number of base pairs, got {t}"
                )));
            }
            let positions = d.positions.as_ref().context("dataset has no `positions`")?;
            interval_hyperedges(positions, t as u64)
        }
        Method::Ball => {
            let tau = a
                .threshold
                .ok_or_else(|| usage("--method ball needs --threshold"))?;
            let metric = match a.metric {
                MetricArg::Euclidean => Metric::Euclidean,
                MetricArg::Cosine => Metric::Cosine,
            };
            let emb = match &d.embeddings {
                Some(e) => e,
                None => {
                    s.note("dataset has no `embeddings`; using node features")?;
                    &d.graph.node_features
                }
            };
            ball_hyperedges(emb, tau, metric)?
        }
    };
    let sizes = || hyperedges.iter().map(Vec::len);
    let result = BuildResult {
        method: a.method,
        num_hyperedges: hyperedges.len(),
        min_size: sizes().min().unwrap_or(0),
        max_size: sizes().max().unwrap_or(0),
        avg_hyperedge_degree: if hyperedges.is_empty() {
            0.0
        } else {
            sizes().sum::<usize>() as f64 / hyperedges.len() as f64
        },
    };
    let json = Report::new("build-hyperedges", Some(&info), a, &result).to_json();
    emit(
        s,
        a.format,
        &json,
        || {
            kv_table(&[
                ("num_hyperedges", result.num_hyperedges.to_string()),
                ("min_size", result.min_size.to_string()),
                ("max_size", result.max_size.to_string()),
                ("avg_hyperedge_degree", f3(result.avg_hyperedge_degree)),
            ])
        },
        None,
    )?;
    if let Some(out) = &a.out {
        d.graph = d.graph.with_hyperedges(hyperedges);
        save_dataset(&d, out)?;
    }
    Ok(())
}

/// Turns a node budget into sampler parameters.
fn sampler_from(a: &SamplerArgs) -> Result<Sampler> {
    let need = || {
        a.budget
            .ok_or_else(|| usage(format!("--method {:?} needs --budget", a.method).to_lowercase()))
    };
    Ok(match a.method {
        SamplerKind::Node => Sampler::Node { budget: need()? },
        SamplerKind::Edge => Sampler::Edge {
            budget_edges: (need()? / 2).max(1),
        },
        SamplerKind::Rw => {
            let roots = match a.roots {
                Some(r) => r,
                None => (need()? / (a.walk_length + 1)).max(1),
            };
            Sampler::Rw {
                roots,
                walk_length: a.walk_length,
            }
        }
        SamplerKind::RandNode => Sampler::RandNode { budget: need()? },
        SamplerKind::RandHyperedge => Sampler::RandHyperedge { budget: need()? },
    })
}

#[derive(Serialize)]
struct SampleResult<'a> {
    sampler: &'a Sampler,
    seed: u64,
    node_ids: &'a [usize],
    hyperedge_ids: &'a [usize],
    stats: GraphStats,
}

pub fn sample(a: &SampleArgs, s: &mut Session<'_>) -> Result<()> {
    s.announce(a, Some(a.seed))?;
    let sampler = sampler_from(&a.sampler)?;
    let (d, info) = load_dataset(&a.input, s.data_dir())?;
    let sub = sampler.sample(&d.graph, &mut ChaCha8Rng::seed_from_u64(a.seed))?;
    let graph = sub.to_graph();
    let result = SampleResult {
        sampler: &sampler,
        seed: a.seed,
        node_ids: &sub.node_ids,
        hyperedge_ids: &sub.hyperedge_ids,
        stats: compute_stats(&graph),
    };
    let json = Report::new("sample", Some(&info), a, &result).to_json();
    match &a.report {
        Some(path) => write_file(path, &json)?,
        None => s.print(&json)?,
    }
    if let Some(out) = &a.out {
        let sampled = Dataset {
            name: format!("{}-sample", d.name),
            graph,
            positions: d
                .positions
                .as_ref()
                .map(|p| sub.node_ids.iter().map(|&v| p[v].clone()).collect()),
            embeddings: d.embeddings.as_ref().map(|e| e.select_rows(&sub.node_ids)),
        };
        save_dataset(&sampled, out)?;
    }
    Ok(())
}

pub fn sampler_report_cmd(a: &SamplerReportArgs, s: &mut Session<'_>) -> Result<()> {
    s.announce(a, Some(a.seed))?;
    let sampler = sampler_from(&a.sampler)?;
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let (d, info) = load_dataset(&a.input, s.data_dir())?;
    let r = sampler_report(&d.graph, &sampler, a.trials, a.seed, a.edge_counting.into())?;
    #[derive(Serialize)]
    struct Out<'a> {
        sampler: &'a Sampler,
        #[serde(flatten)]
        report: &'a hgb::stats::SamplerReport,
    }
    let result = Out {
        sampler: &sampler,
        report: &r,
    };
    let json = Report::new("sampler-report", Some(&info), a, &result).to_json();
    emit(
        s,
        a.format,
        &json,
        || {
            kv_table(&[
                ("sampler", sampler.name().to_string()),
                ("trials", r.trials.to_string()),
                ("num_nodes", format!("{:.1}", r.num_nodes)),
                ("num_edges", format!("{:.1}", r.num_edges)),
                ("num_hyperedges", format!("{:.1}", r.num_hyperedges)),
                ("avg_node_degree", f3(r.avg_node_degree)),
                ("avg_hyperedge_degree", f3(r.avg_hyperedge_degree)),
                ("avg_clustering_coef", f3(r.avg_clustering_coef)),
            ])
        },
        a.out.as_deref(),
    )
}

/// Model spec and training config from protocol flags.
pub fn protocol(
    p: &ProtocolArgs,
    task: Task,
    first_seed: u64,
    split_seed: u64,
) -> Result<(ModelSpec, TrainConfig)> {
    let architecture: Architecture = p
        .model
        .parse()
        .map_err(|e| usage(format!("--model: {e}")))?;
    let mut spec = ModelSpec::for_task(architecture, task);
    spec.hidden_dim = p.hidden;
    spec.num_layers = p.layers;
    spec.dropout = p.dropout;
    spec.check().map_err(|e| usage(e.to_string()))?;
    let saint = match p.saint {
        None => None,
        Some(kind) => {
            let method = match kind {
                SaintKind::Node => SamplerKind::Node,
                SaintKind::Edge => SamplerKind::Edge,
                SaintKind::Rw => SamplerKind::Rw,
            };
            let sa = SamplerArgs {
                method,
                budget: p.budget,
                roots: None,
                walk_length: p.walk_length,
            };
            Some(SaintConfig {
                sampler: sampler_from(&sa)?,
                batch: p.batch,
            })
        }
    };
    let cfg = TrainConfig {
        learning_rate: p.lr,
        epochs: p.epochs,
        seeds: p.seeds,
        first_seed,
        split_seed,
        saint,
    };
    cfg.check().map_err(|e| usage(e.to_string()))?;
    Ok((spec, cfg))
}

#[derive(Serialize)]
pub struct TrainResult {
    pub table_row: String,
    pub split_sizes: [usize; 3],
    pub random_guess: Option<f64>,
    #[serde(flatten)]
    pub report: TrainReport,
}

/// What `train --save-model` writes.
#[derive(Serialize, Deserialize)]
pub struct ModelFile {
    pub tool: String,
    pub version: String,
    pub dataset_sha256: String,
    pub split_seed: u64,
    pub architecture: Architecture,
    pub seeds: Vec<u64>,
    pub models: Vec<Model>,
}

pub fn train_result(
    d: &Dataset,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<(TrainResult, Vec<hgb::gnn::SeedRun>)> {
    let n = d.graph.num_nodes();
    let masks = split(n, cfg.split_seed)?;
    let (report, runs) = train_runs(&d.graph, &masks, spec, cfg)?;
    let (tr, va, te) = split_sizes(n);
    let random_guess = match d.graph.task() {
        Task::Classification { num_classes } => Some(random_guess(num_classes)),
        Task::Regression => None,
    };
    Ok((
        TrainResult {
            table_row: report.table_row(),
            split_sizes: [tr, va, te],
            random_guess,
            report,
        },
        runs,
    ))
}

pub fn train(a: &TrainArgs, s: &mut Session<'_>) -> Result<()> {
    s.announce(a, Some(a.seed))?;
    let (d, info) = load_dataset(&a.dataset, s.data_dir())?;
    let (spec, cfg) = protocol(&a.protocol, d.graph.task(), a.seed, a.split_seed)?;
    let (result, runs) = train_result(&d, &spec, &cfg)?;
    for f in &result.report.failures {
        s.note(&format!("seed {} failed: {}", f.seed, f.message))?;
    }
    let json = Report::new("train", Some(&info), a, &result).to_json();
    let row = format!("{}  {}\n", result.report.model, result.table_row);
    if a.format == Format::Json {
        s.note(row.trim_end())?;
    }
    emit(s, a.format, &json, || row.clone(), a.out.as_deref())?;
    if let Some(path) = &a.save_model {
        let file = ModelFile {
            tool: TOOL.into(),
            version: VERSION.into(),
            dataset_sha256: info.sha256.clone(),
            split_seed: a.split_seed,
            architecture: spec.architecture,
            seeds: runs.iter().map(|r| r.seed).collect(),
            models: runs.into_iter().map(|r| r.model).collect(),
        };
        let mut text = serde_json::to_string(&file)?;
        text.push('\n');
        write_file(path, &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalResult {
    model: String,
    mask: MaskArg,
    split_seed: u64,
    metric: hgb::gnn::MetricKind,
    seeds: Vec<u64>,
    values: Vec<f64>,
    mean: f64,
    std: f64,
    table_row: String,
}

pub fn eval(a: &EvalArgs, s: &mut Session<'_>) -> Result<()> {
    let model_path = resolve(&a.model_file, s.data_dir());
    let text = std::fs::read_to_string(&model_path)
        .with_context(|| format!("cannot read model file {}", model_path.display()))?;
    let file: ModelFile = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a model file", model_path.display()))?;
    let split_seed = a.split_seed.unwrap_or(file.split_seed);
    s.announce(a, Some(split_seed))?;
    if file.models.is_empty() {
        bail!("{} holds no models", model_path.display());
    }
    let (d, info) = load_dataset(&a.dataset, s.data_dir())?;
    if info.sha256 != file.dataset_sha256 {
        s.note("dataset checksum differs from the one the models were trained on")?;
    }
    let masks = split(d.graph.num_nodes(), split_seed)?;
    let mask = match a.mask {
        MaskArg::Train => &masks.train,
        MaskArg::Val => &masks.val,
        MaskArg::Test => &masks.test,
    };
    let values = file
        .models
        .iter()
        .map(|m| evaluate(m, &d.graph, mask))
        .collect::<Result<Vec<f64>, _>>()?;
    let (mean, std) = mean_std(&values);
    let result = EvalResult {
        model: file.architecture.to_string(),
        mask: a.mask,
        split_seed,
        metric: hgb::gnn::MetricKind::for_task(d.graph.task()),
        seeds: file.seeds.clone(),
        values,
        mean,
        std,
        table_row: format!("{mean:.3} ± {std:.3}"),
    };
    let json = Report::new("eval", Some(&info), a, &result).to_json();
    let row = format!("{}  {}\n", result.model, result.table_row);
    emit(s, a.format, &json, || row, a.out.as_deref())
}
