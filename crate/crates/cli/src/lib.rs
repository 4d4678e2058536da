//! Command-line front end: configuration parsing, command dispatch and CSV output.

pub mod commands;
pub mod config;
pub mod csv;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] sairs_core::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Carries the full suite report so it can still be printed.
    #[error("{failed} of {total} checks failed")]
    VerifyFailed {
        failed: usize,
        total: usize,
        report: String,
    },
}

impl CliError {
    /// 0 success, 1 failed verification, 2 config or usage error, 3 runtime error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::VerifyFailed { .. } => 1,
            CliError::Model(_) | CliError::Io { .. } => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sairs", version, about = "SAIRS epidemic model laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (flat key = value file).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file, or directory for `family`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Basic reproduction number, regime and h constants.
    R0,
    /// Disease-free and endemic equilibria with residuals.
    Equilibria,
    /// Jacobian spectra at the equilibria.
    Stability,
    /// Integrate one trajectory and write `t,S,A,I,R`.
    Simulate,
    /// Two-parameter sweep of R0, regime and asymptotic state.
    Sweep,
    /// One trajectory per value of a varied parameter.
    Family,
    /// Compound-matrix certificate for the endemic equilibrium.
    Certificate,
    /// Random endemic parameter sets outside the certified region.
    Probe,
    /// Seeded property suite.
    Verify,
}

/// Runs a parsed command line, writing the human-readable report to `out`.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => config::RunConfig::load(path)?,
        None => config::RunConfig::default(),
    };
    let ctx = commands::Context {
        cfg,
        out_path: cli.out.clone(),
        seed: cli.seed.unwrap_or(0),
        samples: cli.samples,
    };
    let result = match cli.command {
        Command::R0 => commands::r0(&ctx),
        Command::Equilibria => commands::equilibria(&ctx),
        Command::Stability => commands::stability(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Sweep => commands::sweep(&ctx),
        Command::Family => commands::family(&ctx),
        Command::Certificate => commands::certificate(&ctx),
        Command::Probe => commands::probe(&ctx),
        Command::Verify => commands::verify(&ctx),
    };
    let text = match &result {
        Ok(report) | Err(CliError::VerifyFailed { report, .. }) => report.as_str(),
        Err(_) => "",
    };
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    })?;
    result.map(|_| ())
}
