//! Reproducible pricing experiments driven by a JSON config.
//!
//! Each subcommand reads the config, applies command-line overrides, and
//! writes its artifacts to the output directory. Exit status is 0 on
//! success, 1 on a usage or input error, and 2 when a checked guarantee
//! fails.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{ExperimentConfig, Mode, Plan};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] slotprice_core::Error),
    #[error("refused: {0}")]
    Refused(String),
    #[error(
        "{required} probes per pair are needed for the requested accuracy, above the limit of \
         {limit}; pass --samples to run with fewer"
    )]
    Infeasible { required: u64, limit: u64 },
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// What a command found, beyond having run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A checked guarantee failed; artifacts were still written.
    Violation,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violation => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "slotprice", version, about = "Posted-price menus for single-server job scheduling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute optimal menus and value tables.
    Solve(Flags),
    /// Simulate traces under a policy and check their concentration.
    Simulate(Flags),
    /// Estimate the distribution from censored probes.
    Learn(Flags),
    /// Learn, solve on the estimate, and compare against the optimum.
    Pipeline(Flags),
    /// Check the tail-ratio condition and menu monotonicity.
    Check(Flags),
}

/// Flags shared by every subcommand; each overrides the config field of
/// the same name.
#[derive(Debug, Clone, Args)]
pub struct Flags {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the monotone projection of a non-monotone policy.
    #[arg(long)]
    pub project: bool,
    /// Probes per (price, state) pair.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub traces: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Policy file to simulate instead of solving afresh.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Use the true distribution in place of the learned one.
    #[arg(long)]
    pub zero_noise: bool,
}

impl Flags {
    /// Loads the config file and applies the overrides.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(out) = &self.out {
            c.out = out.clone();
        }
        if self.project {
            c.project = true;
        }
        if let Some(n) = self.samples {
            c.samples = Some(n);
        }
        if let Some(m) = self.traces {
            c.traces = m;
        }
        if let Some(d) = self.delta {
            c.delta = d;
        }
        if let Some(p) = &self.policy {
            c.policy = Some(p.clone());
        }
        if self.zero_noise {
            c.zero_noise = true;
        }
        Ok(c)
    }
}

pub fn run(cli: &Cli) -> Result<Status, CliError> {
    match &cli.command {
        Command::Solve(f) => commands::solve(&f.resolve()?),
        Command::Simulate(f) => commands::simulate(&f.resolve()?),
        Command::Learn(f) => commands::learn(&f.resolve()?),
        Command::Pipeline(f) => commands::pipeline(&f.resolve()?),
        Command::Check(f) => commands::check(&f.resolve()?),
    }
}
