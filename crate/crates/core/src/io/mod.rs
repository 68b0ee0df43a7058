//! Dataset files and train/validation/test splits.
//!
//! The canonical dataset file is a single UTF-8 JSON object:
//!
//! | field                | type                          | required | default          |
//! |----------------------|-------------------------------|----------|------------------|
//! | `name`               | string                        | no       | `""`             |
//! | `num_nodes`          | integer                       | yes      |                  |
//! | `node_features`      | `num_nodes` rows of numbers   | yes      |                  |
//! | `edges`              | `[u, v]` pairs                | no       | `[]`             |
//! | `hyperedges`         | lists of node indices         | no       | `[]`             |
//! | `hyperedge_weights`  | numbers, one per hyperedge    | no       | all `1.0`        |
//! | `hyperedge_features` | one row per hyperedge         | no       | absent           |
//! | `parent`             | node index per node           | no       | identity         |
//! | `labels`             | integers or numbers per node  | yes      |                  |
//! | `task`               | `"classification"` / `"regression"` | yes |                  |
//! | `num_classes`        | integer                       | no       | `max(labels)+1`  |
//! | `positions`          | `[chromosome, offset]` per node | no     | absent           |
//! | `embeddings`         | one row per node              | no       | absent           |
//!
//! Arrays are in node-index order. Numbers may be written at any precision;
//! they are held as `f64` in memory.

pub mod musae;

use crate::graph::{HybridGraph, InvalidGraph, Labels, Task};
use crate::matrix::Matrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error in `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error(transparent)]
    Invalid(#[from] InvalidGraph),
}

impl DatasetError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        DatasetError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Genomic coordinate of a node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position(pub String, pub u64);

impl Position {
    pub fn chromosome(&self) -> &str {
        &self.0
    }

    pub fn offset(&self) -> u64 {
        self.1
    }
}

/// A graph plus the auxiliary inputs the hyperedge builders consume.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: HybridGraph,
    pub positions: Option<Vec<Position>>,
    pub embeddings: Option<Matrix>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, graph: HybridGraph) -> Self {
        Self {
            name: name.into(),
            graph,
            positions: None,
            embeddings: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum TaskName {
    Classification,
    Regression,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawLabels {
    Classes(Vec<u64>),
    Values(Vec<f64>),
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetFile {
    #[serde(default)]
    name: String,
    num_nodes: usize,
    node_features: Vec<Vec<f64>>,
    #[serde(default)]
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    hyperedges: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hyperedge_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hyperedge_features: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<Vec<usize>>,
    labels: RawLabels,
    task: TaskName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<Position>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embeddings: Option<Vec<Vec<f64>>>,
}

fn rows_to_matrix(
    field: &str,
    rows: &[Vec<f64>],
    expected_rows: usize,
) -> Result<Matrix, DatasetError> {
    if rows.len() != expected_rows {
        return Err(DatasetError::schema(
            field,
            format!("has {} rows, expected {expected_rows}", rows.len()),
        ));
    }
    let width = rows.first().map_or(0, Vec::len);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != width {
            return Err(DatasetError::schema(
                format!("{field}[{i}]"),
                format!("has {} values, expected {width}", r.len()),
            ));
        }
    }
    let mut data = Vec::with_capacity(rows.len() * width);
    for r in rows {
        data.extend_from_slice(r);
    }
    Ok(Matrix::from_vec(rows.len(), width, data))
}

impl DatasetFile {
    fn into_dataset(self) -> Result<Dataset, DatasetError> {
        let n = self.num_nodes;
        let node_features = rows_to_matrix("node_features", &self.node_features, n)?;

        for (i, &[u, v]) in self.edges.iter().enumerate() {
            for x in [u, v] {
                if x >= n {
                    return Err(DatasetError::schema(
                        format!("edges[{i}]"),
                        format!("index out of range: node {x} but num_nodes is {n}"),
                    ));
                }
            }
        }
        for (i, e) in self.hyperedges.iter().enumerate() {
            if let Some(&x) = e.iter().find(|&&x| x >= n) {
                return Err(DatasetError::schema(
                    format!("hyperedges[{i}]"),
                    format!("index out of range: node {x} but num_nodes is {n}"),
                ));
            }
        }
        let m = self.hyperedges.len();
        let hyperedge_weights = match self.hyperedge_weights {
            Some(w) if w.len() != m => {
                return Err(DatasetError::schema(
                    "hyperedge_weights",
                    format!("has {} entries for {m} hyperedges", w.len()),
                ))
            }
            Some(w) => w,
            None => vec![1.0; m],
        };
        let hyperedge_features = match &self.hyperedge_features {
            Some(rows) => Some(rows_to_matrix("hyperedge_features", rows, m)?),
            None => None,
        };
        let parent = match self.parent {
            Some(p) if p.len() != n => {
                return Err(DatasetError::schema(
                    "parent",
                    format!("has {} entries for {n} nodes", p.len()),
                ))
            }
            Some(p) => {
                if let Some((i, &x)) = p.iter().enumerate().find(|(_, &x)| x >= n) {
                    return Err(DatasetError::schema(
                        format!("parent[{i}]"),
                        format!("index out of range: node {x} but num_nodes is {n}"),
                    ));
                }
                p
            }
            None => (0..n).collect(),
        };

        let labels = match (self.task, self.labels) {
            (TaskName::Classification, RawLabels::Classes(values)) => {
                let values: Vec<usize> = values.into_iter().map(|c| c as usize).collect();
                let inferred = values.iter().max().map_or(0, |&c| c + 1);
                Labels::Classes {
                    num_classes: self.num_classes.unwrap_or(inferred),
                    values,
                }
            }
            (TaskName::Classification, RawLabels::Values(_)) => {
                return Err(DatasetError::schema(
                    "labels",
                    "classification labels must be non-negative integers",
                ))
            }
            (TaskName::Regression, RawLabels::Classes(values)) => {
                Labels::Values(values.into_iter().map(|c| c as f64).collect())
            }
            (TaskName::Regression, RawLabels::Values(values)) => Labels::Values(values),
        };
        if labels.len() != n {
            return Err(DatasetError::schema(
                "labels",
                format!("has {} entries for {n} nodes", labels.len()),
            ));
        }

        if let Some(p) = &self.positions {
            if p.len() != n {
                return Err(DatasetError::schema(
                    "positions",
                    format!("has {} entries for {n} nodes", p.len()),
                ));
            }
        }
        let embeddings = match &self.embeddings {
            Some(rows) => Some(rows_to_matrix("embeddings", rows, n)?),
            None => None,
        };

        let graph = HybridGraph {
            node_features,
            hyperedge_features,
            simple_edges: self.edges,
            hyperedges: self.hyperedges,
            hyperedge_weights,
            parent,
            labels,
        };
        graph.check()?;
        Ok(Dataset {
            name: self.name,
            graph,
            positions: self.positions,
            embeddings,
        })
    }

    fn from_dataset(d: &Dataset) -> Self {
        let g = &d.graph;
        let (labels, task, num_classes) = match &g.labels {
            Labels::Classes {
                values,
                num_classes,
            } => (
                RawLabels::Classes(values.iter().map(|&c| c as u64).collect()),
                TaskName::Classification,
                Some(*num_classes),
            ),
            Labels::Values(v) => (RawLabels::Values(v.clone()), TaskName::Regression, None),
        };
        let all_unit = g.hyperedge_weights.iter().all(|&w| w == 1.0);
        DatasetFile {
            name: d.name.clone(),
            num_nodes: g.num_nodes(),
            node_features: g.node_features.to_rows(),
            edges: g.simple_edges.clone(),
            hyperedges: g.hyperedges.clone(),
            hyperedge_weights: (!all_unit).then(|| g.hyperedge_weights.clone()),
            hyperedge_features: g.hyperedge_features.as_ref().map(Matrix::to_rows),
            parent: (!g.has_identity_parent()).then(|| g.parent.clone()),
            labels,
            task,
            num_classes,
            positions: d.positions.clone(),
            embeddings: d.embeddings.as_ref().map(Matrix::to_rows),
        }
    }
}

fn map_json_error(e: serde_json::Error) -> DatasetError {
    use serde_json::error::Category;
    match e.classify() {
        Category::Data => DatasetError::Schema {
            field: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        },
        _ => DatasetError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    }
}

/// Decodes a dataset from JSON text.
pub fn from_json_str(text: &str) -> Result<Dataset, DatasetError> {
    let file: DatasetFile = serde_json::from_str(text).map_err(map_json_error)?;
    file.into_dataset()
}

/// Encodes a dataset as compact JSON. Unit weights and an identity parent
/// are omitted since they are the defaults.
pub fn to_json_string(d: &Dataset) -> String {
    serde_json::to_string(&DatasetFile::from_dataset(d)).expect("dataset serializes")
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_owned(),
        source,
    })?;
    let raw: DatasetFile = serde_json::from_reader(BufReader::new(file)).map_err(map_json_error)?;
    raw.into_dataset()
}

/// Loads just the graph of a dataset file.
pub fn load(path: impl AsRef<Path>) -> Result<HybridGraph, DatasetError> {
    load_dataset(path).map(|d| d.graph)
}

pub fn save_dataset(d: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    d.graph.check()?;
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &DatasetFile::from_dataset(d)).map_err(|e| io_err(e.into()))?;
    w.write_all(b"\n").map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// Saves a bare graph with an empty dataset name.
pub fn save(g: &HybridGraph, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    save_dataset(&Dataset::new("", g.clone()), path)
}

/// Disjoint train/validation/test node sets, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("cannot split {0} nodes; at least 5 are required")]
    TooFewNodes(usize),
}

/// Fixed 6:2:2 split sizes: `floor(0.6 n)`, `floor(0.2 n)`, remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = 6 * n / 10;
    let val = 2 * n / 10;
    (train, val, n - train - val)
}

/// Shuffles the nodes with a seeded generator and cuts the permutation 6:2:2.
pub fn split(num_nodes: usize, seed: u64) -> Result<SplitMasks, SplitError> {
    if num_nodes < 5 {
        return Err(SplitError::TooFewNodes(num_nodes));
    }
    let mut order: Vec<usize> = (0..num_nodes).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, val, _) = split_sizes(num_nodes);
    let mut parts = [
        order[..train].to_vec(),
        order[train..train + val].to_vec(),
        order[train + val..].to_vec(),
    ];
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, val, test] = parts;
    Ok(SplitMasks { train, val, test })
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Classification { .. } => "classification",
            Task::Regression => "regression",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let d = from_json_str(
            r#"{"num_nodes":2,"node_features":[[1.0],[2.0]],"edges":[[0,1]],"labels":[0,1],
                "task":"classification","num_classes":2}"#,
        )
        .unwrap();
        let g = d.graph;
        assert_eq!(g.num_nodes(), 2);
        assert_eq!(g.num_edges(), 1);
        assert!(g.has_identity_parent());
        assert_eq!(g.task(), Task::Classification { num_classes: 2 });
    }

    #[test]
    fn weights_default_to_one() {
        let d = from_json_str(
            r#"{"num_nodes":3,"node_features":[[0],[0],[0]],"hyperedges":[[0,1,2]],"labels":[0,0,0],
                "task":"classification"}"#,
        )
        .unwrap();
        assert_eq!(d.graph.hyperedge_weights, vec![1.0]);
        assert_eq!(d.graph.task(), Task::Classification { num_classes: 1 });
    }

    #[test]
    fn edge_index_out_of_range() {
        let err = from_json_str(
            r#"{"num_nodes":3,"node_features":[[0],[0],[0]],"edges":[[0,5]],"labels":[0,0,0],
                "task":"classification"}"#,
        )
        .unwrap_err();
        assert!(matches!(&err, DatasetError::Schema { field, .. } if field == "edges[0]"));
        assert!(err.to_string().contains("index out of range"), "{err}");
    }

    #[test]
    fn missing_field_is_schema_error() {
        let err = from_json_str(r#"{"num_nodes":1,"node_features":[[0]],"task":"regression"}"#)
            .unwrap_err();
        assert!(matches!(err, DatasetError::Schema { .. }));
        assert!(err.to_string().contains("labels"), "{err}");
    }

    #[test]
    fn malformed_json_is_parse_error_with_line() {
        let err = from_json_str("{\n\"num_nodes\": 2,\n oops }").unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn invariant_breach_is_validation_error() {
        let err = from_json_str(
            r#"{"num_nodes":2,"node_features":[[0],[0]],"parent":[1,0],"labels":[0.5,1.5],"task":"regression"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, DatasetError::Invalid(_)));
        assert!(err.to_string().contains("parent cycle"));
    }

    #[test]
    fn ragged_features_name_the_row() {
        let err = from_json_str(
            r#"{"num_nodes":2,"node_features":[[0,1],[0]],"labels":[0,0],"task":"regression"}"#,
        )
        .unwrap_err();
        assert!(matches!(&err, DatasetError::Schema { field, .. } if field == "node_features[1]"));
    }

    #[test]
    fn regression_accepts_integer_labels() {
        let d = from_json_str(
            r#"{"num_nodes":1,"node_features":[[0]],"labels":[3],"task":"regression"}"#,
        )
        .unwrap();
        assert_eq!(d.graph.labels, Labels::Values(vec![3.0]));
    }

    #[test]
    fn split_sizes_follow_floor_rule() {
        assert_eq!(split_sizes(10), (6, 2, 2));
        assert_eq!(split_sizes(7), (4, 1, 2));
        // Enumerate the rule against the exact ratio.
        for n in 5..500 {
            let (a, b, c) = split_sizes(n);
            assert_eq!(a + b + c, n);
            assert!((a as f64 - 0.6 * n as f64).abs() < 1.0);
            assert!((b as f64 - 0.2 * n as f64).abs() < 1.0);
            // Both floors can round down, so the remainder absorbs up to two.
            assert!((c as f64 - 0.2 * n as f64).abs() < 2.0, "n={n} test={c}");
        }
    }

    #[test]
    fn split_is_deterministic_and_exhaustive() {
        let a = split(10, 7).unwrap();
        assert_eq!(a, split(10, 7).unwrap());
        assert_eq!((a.train.len(), a.val.len(), a.test.len()), (6, 2, 2));
        let mut all: Vec<_> = a
            .train
            .iter()
            .chain(&a.val)
            .chain(&a.test)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_ne!(split(100, 1).unwrap(), split(100, 2).unwrap());
    }

    #[test]
    fn split_needs_five_nodes() {
        assert_eq!(split(4, 0), Err(SplitError::TooFewNodes(4)));
    }
}
