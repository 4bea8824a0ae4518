//! Batch experiment runner: one JSON config in, one JSON report (plus CSV
//! tables and a metadata file) out.

use std::path::PathBuf;

use clap::Parser;

mod commands;
mod config;
mod output;

pub use commands::Outcome;
pub use config::{parse_config, Command, ConfigError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Clone, Parser)]
#[command(name = "factorspace", version, about = "Experiments on hyperbolic factor-spaces of the unit ball")]
pub struct Args {
    /// Experiment config (JSON, "schema": "1").
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Treat budget and convergence caveats as failures (exit 2).
    #[arg(long)]
    pub strict: bool,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("budget or convergence: {0}")]
    Budget(String),
    #[error("{0}")]
    Engine(String),
    #[error("output: {0}")]
    Io(String),
}

impl From<factorspace::Error> for RunError {
    fn from(e: factorspace::Error) -> Self {
        match e {
            factorspace::Error::Budget { .. } | factorspace::Error::NotConverged { .. } => RunError::Budget(e.to_string()),
            other => RunError::Engine(other.to_string()),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Budget(_) => EXIT_BUDGET,
            _ => EXIT_CONFIG,
        }
    }
}

/// Runs one experiment and returns the process exit code. Diagnostics go to stderr.
pub fn run(args: &Args) -> i32 {
    match try_run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn try_run(args: &Args) -> Result<i32, RunError> {
    let started = std::time::SystemTime::now();
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = parse_config(&text, args.seed)?;
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(ConfigError::new("--threads must be positive").into());
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let outcome = commands::dispatch(&cfg)?;
    output::write(&args.out, &cfg, &outcome, started, args)?;
    let code = if !outcome.pass {
        EXIT_FAIL
    } else if args.strict && !outcome.budget_caveats.is_empty() {
        eprintln!("strict: {}", outcome.budget_caveats.join("; "));
        EXIT_BUDGET
    } else {
        EXIT_OK
    };
    Ok(code)
}
