//! Experiment manifests.
//!
//! ```toml
//! master_seed = 0
//! data_dir = "data"        # optional, relative to the manifest
//!                          # (default: $HGB_DATA_DIR, then the manifest's directory)
//!
//! [protocol]               # optional; train flag names, defaults shown
//! epochs = 50
//! lr = 0.01
//! hidden = 32
//! dropout = 0.5
//! layers = 2
//! seeds = 5
//!
//! [[run]]
//! dataset = "twitch_pt.json"
//! models = ["gcn", "hyperconv"]
//! ```
//!
//! Every (dataset, model) pair trains seeds `master_seed ..` on the split
//! drawn with `master_seed`. A dataset that cannot be found becomes a
//! skipped row and the command exits with status 1 after reporting the
//! rest.

use crate::args::{Format, ProtocolArgs, SaintKind, SuiteArgs};
use crate::commands::{protocol, train_result, TrainResult};
use crate::report::{data_dir_from_env, load_dataset, resolve, DatasetInfo, Report};
use crate::{Session, UsageError};
use anyhow::{Context, Result};
use hgb::io::Dataset;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Protocol {
    pub epochs: usize,
    pub lr: f64,
    pub hidden: usize,
    pub dropout: f64,
    pub layers: usize,
    pub seeds: usize,
    pub saint: Option<SaintKind>,
    pub budget: Option<usize>,
    pub batch: usize,
    pub walk_length: usize,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            epochs: 50,
            lr: 0.01,
            hidden: 32,
            dropout: 0.5,
            layers: 2,
            seeds: 5,
            saint: None,
            budget: None,
            batch: 5,
            walk_length: 2,
        }
    }
}

impl Protocol {
    fn args(&self, model: &str) -> ProtocolArgs {
        ProtocolArgs {
            model: model.to_string(),
            epochs: self.epochs,
            lr: self.lr,
            hidden: self.hidden,
            dropout: self.dropout,
            layers: self.layers,
            seeds: self.seeds,
            saint: self.saint,
            budget: self.budget,
            batch: self.batch,
            walk_length: self.walk_length,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    pub dataset: PathBuf,
    pub models: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub master_seed: u64,
    #[serde(default)]
    pub data_dir: Option<PathBuf>,
    #[serde(default)]
    pub protocol: Protocol,
    pub run: Vec<Run>,
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// (dataset, model) pairs in manifest order.
    pub fn pairs(&self) -> Vec<(PathBuf, String)> {
        self.run
            .iter()
            .flat_map(|r| r.models.iter().map(|m| (r.dataset.clone(), m.clone())))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Skipped,
    Failed,
}

#[derive(Serialize)]
pub struct Row {
    pub dataset: String,
    pub model: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset_info: Option<DatasetInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainResult>,
}

#[derive(Serialize)]
struct SuiteConfig<'a> {
    manifest_path: String,
    /// Directory relative dataset paths were looked up in.
    data_dir: Option<String>,
    manifest: &'a Manifest,
}

#[derive(Serialize)]
struct SuiteResult<'a> {
    master_seed: u64,
    rows: &'a [Row],
}

fn run_pair(
    dataset: &Path,
    model: &str,
    loaded: &BTreeMap<PathBuf, Result<(Dataset, DatasetInfo), String>>,
    m: &Manifest,
) -> Row {
    let mut row = Row {
        dataset: dataset.display().to_string(),
        model: model.to_string(),
        status: Status::Skipped,
        reason: None,
        dataset_info: None,
        train: None,
    };
    let (d, info) = match &loaded[dataset] {
        Ok(v) => v,
        Err(reason) => {
            row.reason = Some(reason.clone());
            return row;
        }
    };
    row.dataset_info = Some(info.clone());
    let outcome = protocol(
        &m.protocol.args(model),
        d.graph.task(),
        m.master_seed,
        m.master_seed,
    )
    .and_then(|(spec, cfg)| train_result(d, &spec, &cfg));
    match outcome {
        Ok((result, _)) => {
            row.status = Status::Ok;
            row.train = Some(result);
        }
        Err(e) => {
            row.status = Status::Failed;
            row.reason = Some(format!("{e:#}"));
        }
    }
    row
}

fn table(rows: &[Row]) -> String {
    let cells: Vec<[String; 3]> = rows
        .iter()
        .map(|r| {
            let value = match (&r.train, &r.reason) {
                (Some(t), _) => t.table_row.clone(),
                (None, Some(reason)) => format!(
                    "{}: {reason}",
                    if r.status == Status::Skipped {
                        "skipped"
                    } else {
                        "failed"
                    }
                ),
                (None, None) => String::new(),
            };
            [r.dataset.clone(), r.model.clone(), value]
        })
        .collect();
    let w0 = cells.iter().map(|c| c[0].len()).max().unwrap_or(0).max(7);
    let w1 = cells.iter().map(|c| c[1].len()).max().unwrap_or(0).max(5);
    let mut s = format!("{:<w0$}  {:<w1$}  {}\n", "dataset", "model", "test metric");
    for [a, b, c] in cells {
        s.push_str(&format!("{a:<w0$}  {b:<w1$}  {c}\n"));
    }
    s
}

/// Runs a manifest; returns whether every row trained.
pub fn suite(a: &SuiteArgs, s: &mut Session<'_>) -> Result<bool> {
    let text = std::fs::read_to_string(&a.manifest)
        .with_context(|| format!("cannot read manifest {}", a.manifest.display()))?;
    let manifest = Manifest::from_toml(&text)
        .map_err(|e| UsageError(format!("manifest {}: {e}", a.manifest.display())))?;
    let base = a.manifest.parent().unwrap_or(Path::new(""));
    let data_dir = a
        .data_dir
        .clone()
        .or_else(|| manifest.data_dir.as_ref().map(|d| base.join(d)))
        .or_else(data_dir_from_env)
        .or_else(|| Some(base.to_path_buf()));
    let config = SuiteConfig {
        manifest_path: a.manifest.display().to_string(),
        data_dir: data_dir.as_ref().map(|d| d.display().to_string()),
        manifest: &manifest,
    };
    s.announce(&config, Some(manifest.master_seed))?;

    let pairs = manifest.pairs();
    let mut loaded = BTreeMap::new();
    for (path, _) in &pairs {
        if loaded.contains_key(path) {
            continue;
        }
        let found = resolve(path, data_dir.as_deref());
        let entry = if found.exists() {
            load_dataset(path, data_dir.as_deref()).map_err(|e| format!("{e:#}"))
        } else {
            Err(format!("dataset file {} not found", path.display()))
        };
        loaded.insert(path.clone(), entry);
    }
    let rows: Vec<Row> = pairs
        .par_iter()
        .map(|(path, model)| run_pair(path, model, &loaded, &manifest))
        .collect();

    let result = SuiteResult {
        master_seed: manifest.master_seed,
        rows: &rows,
    };
    let json = Report::new("suite", None, &config, &result).to_json();
    match a.format {
        Format::Json => s.print(&json)?,
        Format::Table => s.print(&table(&rows))?,
    }
    if let Some(out) = &a.out {
        std::fs::write(out, &json).with_context(|| format!("cannot write {}", out.display()))?;
    }
    Ok(rows.iter().all(|r| r.status == Status::Ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_defaults_and_pairs() {
        let m = Manifest::from_toml(
            "master_seed = 4\n[[run]]\ndataset = \"a.json\"\nmodels = [\"gcn\", \"sage\"]\n",
        )
        .unwrap();
        assert_eq!(m.protocol.epochs, 50);
        assert_eq!(m.pairs().len(), 2);
        assert!(Manifest::from_toml("master_seed = 1\nrun = []\nbogus = 2\n").is_err());
    }
}
