//! JSON report envelope, dataset checksums and data-directory lookup.
//!
//! Every JSON report has the same top level: the tool name and version,
//! the command, the dataset it read (path, name, SHA-256 of the file
//! bytes), the fully resolved configuration and a command-specific
//! `result`. Reports contain no timestamps or host details, so a rerun
//! with the same inputs reproduces the same bytes. The schema lives in
//! `docs/report.schema.json`.

use anyhow::{Context, Result};
use hgb::io::{from_json_str, Dataset};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const TOOL: &str = "hgb";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Environment variable naming the default dataset directory.
pub const DATA_DIR_ENV: &str = "HGB_DATA_DIR";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub path: String,
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Report<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub dataset: Option<&'a DatasetInfo>,
    pub config: &'a C,
    pub result: &'a R,
}

impl<'a, C: Serialize, R: Serialize> Report<'a, C, R> {
    pub fn new(
        command: &'static str,
        dataset: Option<&'a DatasetInfo>,
        config: &'a C,
        result: &'a R,
    ) -> Self {
        Report {
            tool: TOOL,
            version: VERSION,
            command,
            dataset,
            config,
            result,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn data_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// `path` itself if it exists or is absolute, else `data_dir/path` when
/// that exists, else `path` unchanged so the error names what was asked for.
pub fn resolve(path: &Path, data_dir: Option<&Path>) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    match data_dir {
        Some(dir) if dir.join(path).exists() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

/// Reads and decodes a dataset file, hashing the bytes read.
pub fn load_dataset(path: &Path, data_dir: Option<&Path>) -> Result<(Dataset, DatasetInfo)> {
    let resolved = resolve(path, data_dir);
    let bytes = std::fs::read(&resolved)
        .with_context(|| format!("cannot read dataset {}", resolved.display()))?;
    let text = std::str::from_utf8(&bytes)
        .with_context(|| format!("{} is not UTF-8", resolved.display()))?;
    let dataset = from_json_str(text).with_context(|| format!("in {}", resolved.display()))?;
    let info = DatasetInfo {
        path: path.display().to_string(),
        name: dataset.name.clone(),
        sha256: sha256_hex(&bytes),
    };
    Ok((dataset, info))
}

/// Two-column `key  value` table.
pub fn kv_table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in rows {
        s.push_str(&format!("{k:<width$}  {v}\n"));
    }
    s
}
