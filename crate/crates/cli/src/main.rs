use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use besovlab::config::{self, ExperimentConfig};
use besovlab::{run_experiment, Experiment, ExperimentKind};

/// Numerical laboratory for parabolic SPDEs on polygons: simulation,
/// Besov/Sobolev regularity estimation and approximation-rate studies.
#[derive(Parser)]
#[command(name = "besovlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (or BESOVLAB_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte-Carlo path count override (or BESOVLAB_PATHS).
    #[arg(long)]
    paths: Option<u32>,
    /// Base seed override (or BESOVLAB_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count (or BESOVLAB_THREADS); outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Emit a plot script next to the CSV outputs where supported.
    #[arg(long)]
    emit_plot: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate SPDE paths and persist snapshots plus diagnostics.
    Simulate(RunArgs),
    /// Estimate Sobolev- and adaptivity-scale smoothness exponents.
    Regularity(RunArgs),
    /// Uniform vs best-N-term approximation error curves and rates.
    ApproxRates(RunArgs),
    /// Itô-isometry Monte-Carlo and noise summability sweep.
    NoiseCheck(RunArgs),
    /// Wavelet-route vs modulus-route Besov norms on the bundled family.
    NormEquivalence(RunArgs),
}

fn build(kind: ExperimentKind, args: RunArgs) -> Result<Experiment> {
    let cfg = ExperimentConfig::from_file(&args.config)?;
    let out = args
        .out
        .or_else(|| config::env_override_string(None, "BESOVLAB_OUT").map(PathBuf::from))
        .context("--out (or BESOVLAB_OUT) is required")?;
    let paths = args
        .paths
        .or_else(|| config::env_override_u64(None, "BESOVLAB_PATHS").map(|v| v as u32));
    let seed = config::env_override_u64(args.seed, "BESOVLAB_SEED");
    let threads = config::env_override_usize(args.threads, "BESOVLAB_THREADS");
    let mut exp = Experiment::new(kind, cfg, out).with_overrides(paths, seed, threads);
    exp.emit_plot = args.emit_plot;
    Ok(exp)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = |kind, args| -> Result<()> { run_experiment(&build(kind, args)?) };
    let result = match cli.command {
        Command::Simulate(a) => run(ExperimentKind::Simulate, a),
        Command::Regularity(a) => run(ExperimentKind::Regularity, a),
        Command::ApproxRates(a) => run(ExperimentKind::ApproxRates, a),
        Command::NoiseCheck(a) => run(ExperimentKind::NoiseCheck, a),
        Command::NormEquivalence(a) => run(ExperimentKind::NormEquivalence, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
