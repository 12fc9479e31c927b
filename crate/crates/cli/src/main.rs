use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use oasis_cli::config::{load_manifest, Overrides, StudyConfig};
use oasis_cli::scatter::{emit_scatter, write_scatter};
use oasis_cli::study;

/// VAR estimation and structural identification by maximum correlation,
/// Cholesky orderings, and proxy instruments.
#[derive(Parser)]
#[command(name = "oasis", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Study config (TOML); `report` and `scatter` take a manifest.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the config's random seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the permutation-scan budget.
    #[arg(long)]
    budget: Option<u64>,
    /// Override the IRF horizon.
    #[arg(long)]
    horizon: Option<usize>,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            budget: self.budget,
            horizon: self.horizon,
        }
    }

    fn study_config(&self) -> Result<StudyConfig> {
        StudyConfig::load(&self.config, self.overrides()).context("stage: config")
    }

    fn manifest(&self) -> Result<Vec<StudyConfig>> {
        load_manifest(&self.config, self.overrides()).context("stage: config")
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the VAR and write residuals, coefficients, and the
    /// residual covariance.
    Estimate(RunArgs),
    /// Run the identification schemes and write A/B matrices, the
    /// rotation, per-shock correlations, and diagnostics.
    Identify(RunArgs),
    /// Scan variable orderings for the range of the Cholesky average
    /// correlation.
    Scan(RunArgs),
    /// Align structural shocks with proxy instruments or a variable
    /// subset.
    Proxy(RunArgs),
    /// Compute structural impulse responses per scheme.
    Irf(RunArgs),
    /// Run every study in a manifest and write the combined report table
    /// and scatter dataset.
    Report(RunArgs),
    /// Write only the scatter dataset for a manifest of studies.
    Scatter(RunArgs),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Estimate(args) => study::cmd_estimate(&args.study_config()?, &args.out),
        Command::Identify(args) => study::cmd_identify(&args.study_config()?, &args.out),
        Command::Scan(args) => study::cmd_scan(&args.study_config()?, &args.out),
        Command::Proxy(args) => study::cmd_proxy(&args.study_config()?, &args.out),
        Command::Irf(args) => study::cmd_irf(&args.study_config()?, &args.out),
        Command::Report(args) => {
            let configs = args.manifest()?;
            let rows = study::run_report(&configs, &args.out)?;
            write_scatter(&emit_scatter(&rows), &args.out).context("stage: emit")
        }
        Command::Scatter(args) => {
            let configs = args.manifest()?;
            let rows: Vec<_> = configs
                .iter()
                .map(|c| study::compute_study(c).map(|art| art.row))
                .collect::<Result<_>>()?;
            write_scatter(&emit_scatter(&rows), &args.out).context("stage: emit")
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
