//! `--config` files.
//!
//! A config file is TOML. Top-level keys apply to whichever command has a
//! flag of that name; a `[train]`, `[stats]`, ... table applies to that
//! command only, and an unknown key there is a usage error. Keys are flag
//! names with `_` or `-`. Values are spliced into the argument list right
//! after the command name, so flags typed on the command line override them.
//!
//! ```toml
//! seed = 3
//!
//! [train]
//! model = "hyperconv"
//! epochs = 100
//! ```

use crate::args::Cli;
use clap::CommandFactory;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

/// Finds `--config FILE` or `--config=FILE` before any `--`.
fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut found = None;
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let Some(s) = a.to_str() else { continue };
        if s == "--" {
            break;
        }
        if s == "--config" {
            found = it.next().map(PathBuf::from);
        } else if let Some(v) = s.strip_prefix("--config=") {
            found = Some(PathBuf::from(v));
        }
    }
    found
}

/// Index of the command name: the first argument that is neither a flag
/// nor the value of `--config`.
fn command_index(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let s = argv[i].to_str()?;
        if s == "--config" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn value_text(key: &str, v: &toml::Value) -> Result<String, String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(format!("config key `{key}`: unsupported value {other}")),
    }
}

fn flags_for(
    command: &clap::Command,
    key: &str,
    value: &toml::Value,
    strict: bool,
) -> Result<Vec<OsString>, String> {
    let long = key.replace('_', "-");
    let arg = command
        .get_arguments()
        .find(|a| a.get_long() == Some(long.as_str()));
    let Some(arg) = arg else {
        return if strict {
            Err(format!(
                "config key `{key}` is not a flag of `{}`",
                command.get_name()
            ))
        } else {
            Ok(Vec::new())
        };
    };
    if !arg.get_action().takes_values() {
        return match value {
            toml::Value::Boolean(true) => Ok(vec![format!("--{long}").into()]),
            toml::Value::Boolean(false) => Ok(Vec::new()),
            _ => Err(format!(
                "config key `{key}` is a switch and needs true or false"
            )),
        };
    }
    Ok(vec![format!("--{long}={}", value_text(key, value)?).into()])
}

fn load(path: &Path) -> Result<toml::Table, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    text.parse::<toml::Table>()
        .map_err(|e| format!("config {}: {e}", path.display()))
}

/// Returns `argv` with the config file's flags inserted after the command
/// name. Errors are usage errors.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let table = load(&path)?;
    let Some(idx) = command_index(&argv) else {
        return Ok(argv);
    };
    let name = argv[idx].to_string_lossy().into_owned();
    let root = Cli::command();
    let Some(command) = root.find_subcommand(&name) else {
        return Ok(argv);
    };

    let mut injected = Vec::new();
    for (key, value) in &table {
        if !value.is_table() {
            injected.extend(flags_for(command, key, value, false)?);
        }
    }
    if let Some(section) = table.get(&name) {
        let section = section
            .as_table()
            .ok_or_else(|| format!("config key `{name}` must be a table"))?;
        for (key, value) in section {
            injected.extend(flags_for(command, key, value, true)?);
        }
    }

    let mut out = argv[..=idx].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[idx + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn finds_config_and_command() {
        let a = os(&["hgb", "--config", "c.toml", "train", "--epochs", "3"]);
        assert_eq!(config_path(&a), Some(PathBuf::from("c.toml")));
        assert_eq!(command_index(&a), Some(3));
        let b = os(&["hgb", "train", "--config=x.toml"]);
        assert_eq!(config_path(&b), Some(PathBuf::from("x.toml")));
        assert_eq!(command_index(&b), Some(1));
    }

    #[test]
    fn top_level_keys_skip_commands_without_the_flag() {
        let root = Cli::command();
        let stats = root.find_subcommand("stats").unwrap();
        let v = toml::Value::Integer(4);
        assert!(flags_for(stats, "seed", &v, false).unwrap().is_empty());
        assert!(flags_for(stats, "seed", &v, true).is_err());
        let train = root.find_subcommand("train").unwrap();
        assert_eq!(
            flags_for(train, "split_seed", &v, true).unwrap(),
            os(&["--split-seed=4"])
        );
    }
}
