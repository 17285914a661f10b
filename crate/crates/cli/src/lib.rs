//! Command-line pipeline: synthesize or ingest a cohort, reconstruct network
//! ensembles, run stress scenarios and report loss statistics.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use config::{Dynamics, RunConfig};

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "debtstress",
    version,
    about = "Interbank stress tests on reconstructed networks"
)]
pub struct Cli {
    /// JSON file with run settings; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic balance-sheet cohort.
    Synthesize(commands::synthesize::Args),
    /// Reconstruct an ensemble of interbank networks from a cohort.
    Reconstruct(commands::reconstruct::Args),
    /// Run shock scenarios on every network of an ensemble.
    Stress(commands::stress::Args),
    /// Compute VaR/CVaR and summary tables from stress results.
    Report(commands::report::Args),
}

/// A failed run with its exit code: 2 for usage errors, 1 otherwise.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<debtstress::Error> for Failure {
    fn from(e: debtstress::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

/// Missing inputs are usage errors.
pub fn require_input(path: &Path) -> Result<(), Failure> {
    if path.exists() {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "input not found: {}",
            path.display()
        )))
    }
}

pub fn read_input(path: &Path) -> Result<String, Failure> {
    require_input(path)?;
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(anyhow::anyhow!("{}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let config = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Synthesize(args) => commands::synthesize::run(args, &config),
        Command::Reconstruct(args) => commands::reconstruct::run(args, &config),
        Command::Stress(args) => commands::stress::run(args, &config),
        Command::Report(args) => commands::report::run(args, &config),
    }
}
