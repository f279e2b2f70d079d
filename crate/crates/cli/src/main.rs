//! `identify`: config-driven front end for the identifiability estimators.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("error: {0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "identify",
    version,
    about = "A priori practical identifiability of model parameters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides every seed in the config
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the estimators
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory (overrides `output_dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Per-parameter expected information gain -> gains.csv, gains.json
    Identify,
    /// Pairwise parameter dependence -> dependence.csv, dependence.json
    Depend,
    /// First-order Sobol indices -> sobol.csv
    Sobol,
    /// Variance and bias sweeps against the closed form -> variance_sweep.csv, bias_sweep.csv
    Convergence,
    /// Adaptive Metropolis on synthetic or given data -> chain.csv, prediction.csv
    Posterior,
    /// Estimates next to their closed forms -> oracle_check.csv
    OracleCheck,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut config = RunConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        config.estimator.seed = seed;
        if let Some(p) = config.posterior.as_mut() {
            p.chain.seed = seed;
        }
    }
    if let Some(workers) = cli.workers {
        config.estimator.workers = workers;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    let run = config.build()?;
    let dir = run.config.output_dir.clone();
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    match cli.command {
        Command::Identify => commands::identify(&run, &dir),
        Command::Depend => commands::depend(&run, &dir),
        Command::Sobol => commands::sobol(&run, &dir),
        Command::Convergence => commands::convergence(&run, &dir),
        Command::Posterior => commands::posterior(&run, &dir),
        Command::OracleCheck => commands::oracle_check(&run, &dir),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
