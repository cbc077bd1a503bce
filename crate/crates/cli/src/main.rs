//! Experiment runner for learning from coarse labels. One subcommand per
//! experiment kind; each run writes a JSON report (and plot-ready CSV
//! curves) that embeds the fully resolved configuration, so the same seed
//! and config reproduce every numeric field exactly.

mod config;
mod experiments;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use config::{resolve, Resolved, RunArgs};

#[derive(Parser)]
#[command(
    name = "coarse-learn",
    version,
    about = "Reproducible experiments in learning from coarse labels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Recover a discrete distribution from coarse cells by maximum likelihood.
    DiscreteMle(RunArgs),
    /// Answer one bounded statistical query from coarse examples.
    SqQuery(RunArgs),
    /// Train softmax regression from coarse labels, with a fine-label baseline.
    CoarseLogreg(RunArgs),
    /// Recover a Gaussian mean from convex coarse cells.
    GaussianMean(RunArgs),
    /// Reduce a max-cut instance to coarse Gaussian mean estimation.
    MaxcutDemo(RunArgs),
    /// Information-preservation diagnostics for a partition law.
    AlphaDiag(RunArgs),
}

/// Failure classes, mapped onto process exit codes: bad configuration or
/// inputs exit 2, runtime failures exit 1. Budget exhaustion is not an
/// error here; it travels through [`Outcome`] and exits 3.
pub enum CliError {
    Config(String),
    Runtime(String),
}

/// A finished pipeline: complete results, or the partial results available
/// when the sample budget ran out.
pub enum Outcome {
    Done(Value),
    BudgetExhausted { partial: Value, message: String },
}

pub fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Library errors that point at caller-supplied values are config errors;
/// the rest are runtime failures.
pub fn classify(e: coarse_learn::Error) -> CliError {
    use coarse_learn::Error as E;
    match e {
        E::InvalidArgument(_) | E::PartitionInvalid(_) | E::InvalidGraph(_) | E::Parse { .. } => {
            CliError::Config(e.to_string())
        }
        other => CliError::Runtime(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("config error: {message}");
        return ExitCode::from(2);
    }
    let code = match &cli.command {
        Command::DiscreteMle(args) => execute("discrete-mle", args, experiments::discrete_mle),
        Command::SqQuery(args) => execute("sq-query", args, experiments::sq_query),
        Command::CoarseLogreg(args) => execute("coarse-logreg", args, experiments::coarse_logreg),
        Command::GaussianMean(args) => execute("gaussian-mean", args, experiments::gaussian_mean),
        Command::MaxcutDemo(args) => execute("maxcut-demo", args, experiments::maxcut_demo),
        Command::AlphaDiag(args) => execute("alpha-diag", args, experiments::alpha_diag),
    };
    ExitCode::from(code)
}

/// Applies `COARSE_LEARN_THREADS` to the global worker pool.
fn configure_threads() -> Result<(), String> {
    let raw = match std::env::var("COARSE_LEARN_THREADS") {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(std::env::VarError::NotUnicode(_)) => {
            return Err("COARSE_LEARN_THREADS is not valid unicode".into());
        }
    };
    let threads = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("COARSE_LEARN_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("cannot size the worker pool: {e}"))
}

fn execute<P>(
    kind: &'static str,
    args: &RunArgs,
    run: fn(&Resolved<P>) -> Result<Outcome, CliError>,
) -> u8
where
    P: DeserializeOwned + Serialize + Default,
{
    let resolved: Resolved<P> = match resolve(kind, args) {
        Ok(resolved) => resolved,
        Err(message) => {
            eprintln!("config error: {message}");
            return 2;
        }
    };
    if let Err(e) = std::fs::create_dir_all(&resolved.out_dir) {
        eprintln!("error: cannot create {}: {e}", resolved.out_dir.display());
        return 1;
    }
    let started = Instant::now();
    let outcome = match run(&resolved) {
        Ok(outcome) => outcome,
        Err(CliError::Config(message)) => {
            eprintln!("config error: {message}");
            return 2;
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            return 1;
        }
    };
    let (results, exhausted) = match &outcome {
        Outcome::Done(results) => (results, None),
        Outcome::BudgetExhausted { partial, message } => (partial, Some(message)),
    };
    match report::write_report(&resolved, results, started) {
        Ok(path) => {
            if let Some(message) = exhausted {
                eprintln!("budget exhausted: {message}");
            }
            println!("report: {}", path.display());
            if exhausted.is_some() {
                3
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: cannot write report: {e}");
            1
        }
    }
}
