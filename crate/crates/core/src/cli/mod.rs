//! The `tcl` command-line tool.
//!
//! Subcommands: `gen`, `train`, `score`, `eval`, `report`. Exit codes are
//! 0 on success, 2 for usage or configuration errors, 1 for runtime errors.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::Scheme;
use crate::difficulty::MetricKind;

pub use commands::{cmd_eval, cmd_gen, cmd_report, cmd_score, cmd_train, format_sig};
pub use config::{CliConfig, SEED_ENV};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Run(crate::Error::Config(_)) => 2,
            CliError::Run(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tcl", version, about = "Two-stage curriculum learning for sequence labeling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic train/dev/test corpus and a manifest.
    Gen(GenArgs),
    /// Train a tagger, with or without the curriculum.
    Train(TrainArgs),
    /// Write per-sentence difficulty scores as CSV.
    Score(ScoreArgs),
    /// Evaluate a checkpoint and print a JSON report.
    Eval(EvalArgs),
    /// Merge run logs into one learning-curve CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; defaults to a fresh `gen-*` directory under `out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Baseline,
    Tcl,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_enum, default_value = "tcl")]
    pub mode: Mode,
    #[arg(long, value_parser = parse_metric)]
    pub metric: Option<MetricKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub e0: Option<usize>,
    #[arg(long)]
    pub es: Option<usize>,
    #[arg(long)]
    pub lambda0: Option<f64>,
    #[arg(long)]
    pub e_grow: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Tagger checkpoint; not needed for the length and random metrics.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_parser = parse_metric)]
    pub metric: MetricKind,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Label scheme of `--data` when no checkpoint is given.
    #[arg(long, value_parser = parse_scheme, default_value = "bmes")]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 5)]
    pub top_n: usize,
    #[arg(long, default_value_t = 3)]
    pub mc_passes: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

/// Runs a parsed command, writing its primary output to stdout.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Gen(args) => cmd_gen(&args, &mut stdout),
        Command::Train(args) => cmd_train(&args, &mut stdout),
        Command::Score(args) => cmd_score(&args, &mut stdout),
        Command::Eval(args) => cmd_eval(&args, &mut stdout),
        Command::Report(args) => cmd_report(&args, &mut stdout),
    }
}
