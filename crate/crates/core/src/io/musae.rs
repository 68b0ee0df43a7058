//! Import of the upstream MUSAE release files.
//!
//! Each MUSAE graph ships as three files:
//!
//! * an edge list CSV with a header row (`from,to` or `id_1,id_2`), one
//!   undirected edge per line;
//! * a target CSV with a header row naming an id column and one or more
//!   target columns (for Twitch: `id,days,mature,views,partner,new_id`, where
//!   the edge list refers to `new_id`);
//! * a features JSON object mapping node id to the list of active feature
//!   indices (multi-hot).
//!
//! The import deduplicates edges under unordered comparison, drops
//! self-loops, and leaves hyperedges empty; run the clique builder afterwards.

use super::{Dataset, DatasetError};
use crate::graph::{HybridGraph, Labels};
use crate::matrix::Matrix;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    /// Distinct target values, sorted as strings, become classes `0..k`.
    Classes,
    /// Target values parsed as real numbers.
    Values,
}

#[derive(Clone, Debug)]
pub struct MusaeImport<'a> {
    pub name: &'a str,
    pub edges: &'a Path,
    pub target: &'a Path,
    pub features: Option<&'a Path>,
    pub id_column: &'a str,
    pub target_column: &'a str,
    pub target_kind: TargetKind,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> DatasetError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    DatasetError::Parse {
        line,
        column: 0,
        message: format!("{}: {e}", path.display()),
    }
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize, DatasetError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| {
            DatasetError::schema(
                path.display().to_string(),
                format!("no column named `{name}`"),
            )
        })
}

impl MusaeImport<'_> {
    pub fn run(&self) -> Result<Dataset, DatasetError> {
        // Targets define the node set; node index = rank of the id.
        let file = File::open(self.target).map_err(io_err(self.target))?;
        let mut reader = csv::Reader::from_reader(BufReader::new(file));
        let headers = reader
            .headers()
            .map_err(|e| csv_err(self.target, e))?
            .clone();
        let id_col = column(&headers, self.id_column, self.target)?;
        let target_col = column(&headers, self.target_column, self.target)?;
        let mut rows: Vec<(String, String)> = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| csv_err(self.target, e))?;
            rows.push((
                rec[id_col].trim().to_owned(),
                rec[target_col].trim().to_owned(),
            ));
        }
        let numeric_ids = rows.iter().all(|(id, _)| id.parse::<u64>().is_ok());
        if numeric_ids {
            rows.sort_by_key(|(id, _)| id.parse::<u64>().expect("checked numeric"));
        }
        let mut index: HashMap<String, usize> = HashMap::with_capacity(rows.len());
        for (i, (id, _)) in rows.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(DatasetError::schema(
                    self.id_column,
                    format!("duplicate node id {id}"),
                ));
            }
        }
        let n = rows.len();

        let labels = match self.target_kind {
            TargetKind::Classes => {
                let classes: BTreeSet<&str> = rows.iter().map(|(_, t)| t.as_str()).collect();
                let class_of: HashMap<&str, usize> =
                    classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
                Labels::Classes {
                    values: rows.iter().map(|(_, t)| class_of[t.as_str()]).collect(),
                    num_classes: classes.len(),
                }
            }
            TargetKind::Values => {
                let mut values = Vec::with_capacity(n);
                for (id, t) in &rows {
                    let v = t.parse::<f64>().map_err(|_| {
                        DatasetError::schema(
                            self.target_column,
                            format!("node {id}: `{t}` is not a number"),
                        )
                    })?;
                    values.push(v);
                }
                Labels::Values(values)
            }
        };

        let file = File::open(self.edges).map_err(io_err(self.edges))?;
        let mut reader = csv::Reader::from_reader(BufReader::new(file));
        let mut seen = HashSet::new();
        let mut edges = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| csv_err(self.edges, e))?;
            if rec.len() < 2 {
                continue;
            }
            let lookup = |s: &str| {
                index.get(s.trim()).copied().ok_or_else(|| {
                    DatasetError::schema(
                        self.edges.display().to_string(),
                        format!("unknown node id {}", s.trim()),
                    )
                })
            };
            let (u, v) = (lookup(&rec[0])?, lookup(&rec[1])?);
            if u != v && seen.insert((u.min(v), u.max(v))) {
                edges.push([u.min(v), u.max(v)]);
            }
        }

        let node_features = match self.features {
            Some(path) => {
                let file = File::open(path).map_err(io_err(path))?;
                let raw: BTreeMap<String, Vec<usize>> =
                    serde_json::from_reader(BufReader::new(file)).map_err(|e| {
                        DatasetError::Parse {
                            line: e.line(),
                            column: e.column(),
                            message: e.to_string(),
                        }
                    })?;
                let dim = raw.values().flatten().max().map_or(0, |&m| m + 1);
                let mut x = Matrix::zeros(n, dim);
                for (id, active) in &raw {
                    if let Some(&v) = index.get(id) {
                        for &f in active {
                            x[(v, f)] = 1.0;
                        }
                    }
                }
                x
            }
            None => Matrix::filled(n, 1, 1.0),
        };

        let graph = HybridGraph::new(node_features, labels).with_edges(edges);
        graph.check()?;
        Ok(Dataset::new(self.name, graph))
    }
}

/// Reads a plain edge list (two node indices per line, `,` or whitespace
/// separated, `#` comments) into a featureless graph on `0..=max index`.
pub fn import_edge_list(path: &Path, name: &str) -> Result<Dataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    let mut max = None;
    let mut first = true;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty());
        let parse = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
        let (Some(u), Some(v)) = (parse(parts.next()), parse(parts.next())) else {
            if std::mem::take(&mut first) {
                continue; // header
            }
            return Err(DatasetError::Parse {
                line: lineno + 1,
                column: 0,
                message: format!("bad edge line `{line}`"),
            });
        };
        first = false;
        max = Some(max.unwrap_or(0).max(u).max(v));
        if u != v && seen.insert((u.min(v), u.max(v))) {
            edges.push([u.min(v), u.max(v)]);
        }
    }
    let n = max.map_or(0, |m| m + 1);
    let graph = HybridGraph::new(
        Matrix::filled(n, 1, 1.0),
        Labels::Classes {
            values: vec![0; n],
            num_classes: 1,
        },
    )
    .with_edges(edges);
    Ok(Dataset::new(name, graph))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p)
            .unwrap()
            .write_all(body.as_bytes())
            .unwrap();
        p
    }

    #[test]
    fn twitch_style_import() {
        let dir = std::env::temp_dir().join(format!("hgb-musae-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let edges = write(&dir, "edges.csv", "from,to\n0,1\n1,2\n2,1\n2,2\n");
        let target = write(
            &dir,
            "target.csv",
            "id,days,mature,views,partner,new_id\n9,1,True,5,False,2\n7,1,False,5,False,0\n8,1,True,5,False,1\n",
        );
        let feats = write(&dir, "features.json", r#"{"0":[0,3],"1":[1],"2":[]}"#);
        let d = MusaeImport {
            name: "toy",
            edges: &edges,
            target: &target,
            features: Some(&feats),
            id_column: "new_id",
            target_column: "mature",
            target_kind: TargetKind::Classes,
        }
        .run()
        .unwrap();
        let g = d.graph;
        assert_eq!(g.simple_edges, vec![[0, 1], [1, 2]]);
        assert_eq!(
            g.labels,
            Labels::Classes {
                values: vec![0, 1, 1],
                num_classes: 2
            }
        );
        assert_eq!(g.node_features.shape(), (3, 4));
        assert_eq!(g.node_features.row(0), &[1.0, 0.0, 0.0, 1.0]);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn plain_edge_list() {
        let dir = std::env::temp_dir().join(format!("hgb-el-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = write(&dir, "g.txt", "# comment\nsrc dst\n0 1\n1,3\n3 1\n");
        let d = import_edge_list(&p, "g").unwrap();
        assert_eq!(d.graph.num_nodes(), 4);
        assert_eq!(d.graph.simple_edges, vec![[0, 1], [1, 3]]);
        std::fs::remove_dir_all(&dir).ok();
    }
}
