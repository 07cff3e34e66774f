//! Config-driven runner for the transport verifications.
//!
//! `hot inner|calculus|outer --config run.json` builds the manifold, ensembles and
//! cost described by the config, runs the checks of that layer and writes a JSON
//! report plus CSV exports. `hot plotdata REPORT` turns the report's series into a
//! long-format `series,x,y` CSV.
//!
//! Exit codes: 0 every verdict passed, 1 some tolerance failed, 2 usage or config
//! error, 3 solver error.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

/// Environment variable overriding the config's output directory.
pub const OUT_DIR_ENV: &str = "HOT_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("solver: {0}")]
    Solver(#[source] hot_core::Error),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    /// Errors raised while building inputs from the config.
    pub fn config(e: hot_core::Error) -> Self {
        Self::Config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) | Self::Output(_) => 2,
            Self::Solver(_) => 3,
        }
    }
}

impl From<hot_core::Error> for CliError {
    /// Failures during a run: numerical failures are solver errors, the rest
    /// stem from inputs.
    fn from(e: hot_core::Error) -> Self {
        use hot_core::Error as E;
        match e {
            E::Convergence { .. } | E::Domain(_) | E::Pair { .. } => Self::Solver(e),
            other => Self::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hot", version, about = "Hierarchical optimal transport checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact and entropic transport between paired atoms, duality and norm identity.
    Inner(RunArgs),
    /// Derivative of W2^2, continuity equation, cylinder-function contract, Lipschitz bound.
    Calculus(RunArgs),
    /// Outer transport between the ensembles and its structural checks.
    Outer(RunArgs),
    /// Long-format CSV of the series stored in a report.
    Plotdata(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides HOT_OUT_DIR and the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Replaces the config's root seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(value_name = "REPORT")]
    pub report: PathBuf,
    /// Output directory; defaults to the report's directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Output directory: `--out`, then `HOT_OUT_DIR`, then the config, then `.`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>, base_dir: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    match config {
        Some(p) => base_dir.join(p),
        None => PathBuf::from("."),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(report_passed) => {
            if report_passed {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("hot: {e}");
            e.exit_code()
        }
    }
}
