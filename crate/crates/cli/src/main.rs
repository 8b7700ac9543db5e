//! `bgrd`: bound sweeps and coding simulations for Bernoulli-Gaussian sources.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;
use crate::output::Format;

/// Sets the default worker count.
pub const THREADS_ENV: &str = "BGRD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bgrd", version, about = "Rate-distortion bounds and coding simulations for Bernoulli-Gaussian sources")]
pub struct Cli {
    /// Probability that a source symbol is nonzero.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Variance of the nonzero values.
    #[arg(long, global = true)]
    pub sigma2: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All bounds over a distortion sweep.
    Bounds(SweepArgs),
    /// The improvement term and its small-distortion limit over a sweep.
    Ri(SweepArgs),
    /// Run the two-stage codec and report its operating point.
    SimulateCodec(CodecArgs),
    /// Run the randomized-codebook channel experiment.
    SimulateChannel(ChannelArgs),
    /// Concentration of Gaussian typicality with block length.
    Typicality(TypicalityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub d_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    pub spacing: Option<Spacing>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Coarse grid size over the score threshold.
    #[arg(long)]
    pub l_grid: Option<usize>,
    /// Coarse grid size over the tail threshold.
    #[arg(long)]
    pub u_grid: Option<usize>,
    /// Refinement gain that triggers a doubled-grid rerun.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CodecArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long)]
    pub target_d: Option<f64>,
    /// Support typicality slack; defaults to 3.5 standard deviations.
    #[arg(long)]
    pub epsilon1: Option<f64>,
    /// Fixed quantizer step in units of the value standard deviation.
    #[arg(long)]
    pub step: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Codec distortion target.
    #[arg(long)]
    pub d: Option<f64>,
    /// Codebook rate in bits per symbol; overrides --rate-factor.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Codebook rate as a multiple of the improvement term at D.
    #[arg(long)]
    pub rate_factor: Option<f64>,
    /// Score threshold; defaults to the optimizer's witness.
    #[arg(long = "threshold")]
    pub threshold: Option<f64>,
    /// Typicality slack for failure diagnostics.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Write the failure-mode histogram here as CSV.
    #[arg(long)]
    pub failures: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct TypicalityArgs {
    /// Comma-separated block lengths.
    #[arg(long, value_delimiter = ',')]
    pub n_values: Option<Vec<usize>>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Interval endpoints run over `j * grid-step` for `|j| <= grid-half-width`.
    #[arg(long)]
    pub grid_half_width: Option<u32>,
    #[arg(long)]
    pub grid_step: Option<f64>,
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = v.parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    commands::dispatch(&cli, &config)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("bgrd: {}", msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("bgrd: {}", chain.join(": "));
            ExitCode::FAILURE
        }
    }
}
