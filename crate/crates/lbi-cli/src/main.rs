//! Batch front end for the trend-break toolkit: detection on measurement
//! files, hardware-datapath simulation with golden-model checking, accuracy
//! experiments, cycle sweeps, and testbench generation.

mod commands;
mod config;
mod errors;
mod io;
mod manifest;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Defaults;
use errors::{input_errors, CliResult};

#[derive(Parser)]
#[command(
    name = "lbi",
    version,
    about = "Trend-break detection via linearized Bregman iterations, with a bit-true \
             fixed-point path, a cycle-accurate datapath simulator, and clock-cycle estimates"
)]
struct Cli {
    /// TOML config file providing defaults (lambda, iterations_per_sample,
    /// domain, format, output_dir).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect level shifts in a signal file.
    Detect(commands::detect::DetectArgs),
    /// Simulate the hardware datapath and check it against the golden solver.
    SimulateHw(commands::simulate::SimulateArgs),
    /// Compare estimation accuracy between double and fixed point.
    ExperimentAccuracy(commands::experiment::ExperimentArgs),
    /// Tabulate clock-cycle estimates across bank counts or data lengths.
    SweepCycles(commands::sweep::SweepArgs),
    /// Generate a random testbench profile and signal.
    GenProfile(commands::gen_profile::GenProfileArgs),
}

fn dispatch(cli: Cli) -> CliResult {
    let defaults = Defaults::load(cli.config.as_deref()).map_err(errors::CliError::input)?;
    match cli.command {
        Command::Detect(args) => input_errors(commands::detect::run(args, &defaults)),
        Command::SimulateHw(args) => commands::simulate::run(args, &defaults),
        Command::ExperimentAccuracy(args) => {
            input_errors(commands::experiment::run(args, &defaults))
        }
        Command::SweepCycles(args) => input_errors(commands::sweep::run(args, &defaults)),
        Command::GenProfile(args) => input_errors(commands::gen_profile::run(args, &defaults)),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code)
        }
    }
}
