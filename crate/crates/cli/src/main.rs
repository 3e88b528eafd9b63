//! Command-line front end for the thermal-variability pipeline.
//!
//! Subcommands: `track` (ROI tracking + signal extraction), `metrics`
//! (outlier rejection, the sixteen-metric grid, pSQI), `synth` (ground-truth
//! generation), and `compare` (per-metric repeated-measures ANOVA with
//! post-hoc tests). Every command is deterministic given identical inputs
//! and configuration, and each run writes a manifest sufficient to reproduce
//! its outputs byte-exactly.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thermavar::{Error, ErrorClass};

mod cmd_compare;
mod cmd_metrics;
mod cmd_synth;
mod cmd_track;
mod common;

#[derive(Parser, Debug)]
#[command(name = "thermavar", version, about = "Nasal thermal variability pipeline")]
pub struct Cli {
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "thermavar-out")]
    pub output: PathBuf,

    /// Report format for tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Spec file for `synth` (TOML or JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed point "X,Y" on frame 0, for `track`.
    #[arg(long = "seed-point", global = true, value_parser = parse_pair)]
    pub seed_point: Option<Pair>,

    /// Low-pass cut-off frequency in Hz.
    #[arg(long, global = true, default_value_t = thermavar::pipeline::DEFAULT_CUTOFF_HZ)]
    pub cutoff: f64,

    /// Respiratory band "LO,HI" in Hz for pSQI.
    #[arg(long, global = true, value_parser = parse_pair, default_value = "0.1,0.85")]
    pub band: Pair,

    /// Normalization scope across one person's sessions.
    #[arg(long, global = true, value_enum, default_value_t = NormScope::Pooled)]
    pub norm: NormScope,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormScope {
    /// One min/max over all of the person's sessions.
    Pooled,
    /// Each session scaled against its own range.
    PerSession,
}

/// A comma-separated pair of numbers on the command line.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Pair(pub f64, pub f64);

fn parse_pair(s: &str) -> Result<Pair, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `A,B`, got `{s}`"));
    }
    let a = parts[0].trim().parse().map_err(|_| format!("bad number `{}`", parts[0]))?;
    let b = parts[1].trim().parse().map_err(|_| format!("bad number `{}`", parts[1]))?;
    Ok(Pair(a, b))
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Track a seed ROI across a sequence and extract the raw thermal signal.
    Track(cmd_track::TrackArgs),
    /// Reject outliers and compute the sixteen-metric grid plus pSQI.
    Metrics(cmd_metrics::MetricsArgs),
    /// Generate synthetic sequences and signals with ground truth.
    Synth(cmd_synth::SynthArgs),
    /// Per-metric repeated-measures ANOVA with Bonferroni post-hoc pairs.
    Compare(cmd_compare::CompareArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Track(args) => cmd_track::run(&cli, args),
        Command::Metrics(args) => cmd_metrics::run(&cli, args),
        Command::Synth(args) => cmd_synth::run(&cli, args),
        Command::Compare(args) => cmd_compare::run(&cli, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Exit-code taxonomy: 0 ok, 2 io/format, 3 geometry, 4 degenerate signal,
/// 5 statistical shape.
fn exit_code(err: &Error) -> u8 {
    match err.class() {
        ErrorClass::Io => 2,
        ErrorClass::Geometry => 3,
        ErrorClass::DegenerateSignal => 4,
        ErrorClass::StatsShape => 5,
    }
}
