//! The `hgb` command-line tool.
//!
//! [`run`] parses arguments (after splicing in a `--config` file, see
//! [`config`]), dispatches to a command and returns the exit status:
//! 0 on success, 1 when a command fails at run time, 2 for usage errors.
//! Reports go to standard output; the resolved configuration, the seed and
//! other notes go to standard error.
//!
//! ```
//! let mut out = Vec::new();
//! let mut err = Vec::new();
//! let code = hgb_cli::run(["hgb", "train", "--no-such-flag"], &mut out, &mut err);
//! assert_eq!(code, 2);
//! ```

mod args;
mod commands;
pub mod config;
pub mod report;
pub mod suite;

pub use args::{Cli, Command};
pub use commands::ModelFile;

use clap::Parser;
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// An error in how the tool was invoked rather than in the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Output streams and settings shared by the commands.
pub struct Session<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    data_dir: Option<PathBuf>,
}

impl Session<'_> {
    fn print(&mut self, text: &str) -> anyhow::Result<()> {
        self.out.write_all(text.as_bytes())?;
        Ok(())
    }

    fn note(&mut self, text: &str) -> anyhow::Result<()> {
        writeln!(self.err, "{text}")?;
        Ok(())
    }

    /// Echoes the resolved configuration and seed to standard error.
    fn announce<C: Serialize>(&mut self, config: &C, seed: Option<u64>) -> anyhow::Result<()> {
        writeln!(self.err, "config: {}", serde_json::to_string(config)?)?;
        match seed {
            Some(s) => writeln!(self.err, "seed: {s}")?,
            None => writeln!(self.err, "seed: none")?,
        }
        Ok(())
    }

    fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }
}

/// Runs the tool on `argv` (program name first) and returns the exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match config::expand(argv) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            return if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                EXIT_USAGE
            } else {
                let _ = write!(out, "{}", e.render());
                EXIT_OK
            };
        }
    };
    let mut session = Session {
        out,
        err,
        data_dir: report::data_dir_from_env(),
    };
    let outcome = match &cli.command {
        Command::Stats(a) => commands::stats(a, &mut session).map(|_| true),
        Command::Convert(a) => commands::convert(a, &mut session).map(|_| true),
        Command::Split(a) => commands::split_cmd(a, &mut session).map(|_| true),
        Command::BuildHyperedges(a) => commands::build_hyperedges(a, &mut session).map(|_| true),
        Command::Sample(a) => commands::sample(a, &mut session).map(|_| true),
        Command::SamplerReport(a) => commands::sampler_report_cmd(a, &mut session).map(|_| true),
        Command::Train(a) => commands::train(a, &mut session).map(|_| true),
        Command::Eval(a) => commands::eval(a, &mut session).map(|_| true),
        Command::Suite(a) => suite::suite(a, &mut session),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_RUNTIME,
        Err(e) => {
            let name = cli.command.name();
            if let Some(u) = e.downcast_ref::<UsageError>() {
                let _ = writeln!(
                    session.err,
                    "error: {u}\n\nFor more information, try 'hgb {name} --help'."
                );
                EXIT_USAGE
            } else {
                let _ = writeln!(session.err, "hgb {name}: {e:#}");
                EXIT_RUNTIME
            }
        }
    }
}
