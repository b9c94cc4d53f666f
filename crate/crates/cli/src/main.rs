//! Command-line front end: computes eigenmode tables, field and flux
//! traces, parameter sweeps, and the self-validation report, writing
//! machine-readable CSV or JSON plus a sidecar with the config hash and
//! unit-restoration factors.
//!
//! Exit codes: 0 = ok, 1 = a validation check failed, 2 = configuration
//! error.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "slabrad", version, about = "Collective emission eigenmodes and fluorescence of thin crystal slabs")]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path; overrides output.path from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format; overrides output.format from the config.
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    format: Option<String>,

    /// Skip certification and report the closed-form seed roots only.
    #[arg(long, global = true)]
    seed_only: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certified eigenfrequency table: shifts, decay rates, weights.
    Modes,
    /// Emitted field envelope trace at the detector.
    Field,
    /// Normally ordered energy flux trace with its mode-pair components.
    Flux,
    /// Sweep layer count or a dimensionless parameter; tabulate rates.
    Sweep,
    /// Run the full self-validation suite for the configured slab.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config_path = match &cli.config {
        Some(p) => p.clone(),
        None => {
            eprintln!("error: --config <path> is required");
            return ExitCode::from(2);
        }
    };
    let raw = match std::fs::read(&config_path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let run_config: config::RunConfig = match serde_json::from_slice(&raw) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    let ctx = commands::Context {
        config: run_config,
        config_hash: config::config_hash(&raw),
        out: cli.out,
        format: cli.format,
        seed_only: cli.seed_only,
    };
    let result = match cli.command {
        Command::Modes => commands::cmd_modes(&ctx),
        Command::Field => commands::cmd_field(&ctx),
        Command::Flux => commands::cmd_flux(&ctx),
        Command::Sweep => commands::cmd_sweep(&ctx),
        Command::Validate => commands::cmd_validate(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::CheckFailed(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(1)
        }
        Err(commands::CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
