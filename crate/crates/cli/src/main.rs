//! `claimclass`: ingest, explore, train, evaluate, sweep and plot.
//!
//! Exit codes: 0 on success, 1 when a computation fails, 2 for usage or
//! configuration errors (including missing input files).

mod artifacts;
mod commands;
mod config;

use clap::{Parser, Subcommand, ValueEnum};
use config::PositiveClass;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "claimclass", version, about = "Claim / no-claim classification for motor insurance policies")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides paths.out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Split seed (overrides preprocess.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for neighbour search.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Cap on training rows (overrides preprocess.subsample).
    #[arg(long, global = true)]
    pub subsample: Option<usize>,
    /// Class counted as positive in confusion matrices.
    #[arg(long, global = true, value_enum)]
    pub positive_class: Option<PositiveClass>,
    /// Fit the scaler on the training split only.
    #[arg(long, global = true)]
    pub fit_on_train: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Knn,
    Logreg,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::Logreg => "logreg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    K,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKind {
    KSweep,
    CSweep,
    Path,
    Proportions,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, join and label the policy and claim tables.
    Ingest {
        #[arg(long)]
        policies: Option<PathBuf>,
        #[arg(long)]
        claims: Option<PathBuf>,
    },
    /// Claim proportions, correlation heatmap, department statistics and maps.
    Explore {
        #[arg(long)]
        geojson: Option<PathBuf>,
    },
    /// Fit a model on the training split and save it.
    Train {
        #[arg(long, value_enum)]
        model: ModelKind,
        /// Model file path (default: <out>/model_<kind>.json).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score a saved model on the test split.
    Evaluate {
        #[arg(long)]
        model_file: PathBuf,
    },
    /// Accuracy across neighbour counts or regularisation strengths.
    Sweep {
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values (default: from the config).
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Render an SVG from a CSV written by another command.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

/// Why a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Compute(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(error)) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}
