//! `mutomo` command-line front end.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures.

mod args;
mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use args::{BellArgs, EvolveArgs, ReconstructArgs, ReportArgs, SimulateArgs};

#[derive(Parser)]
#[command(name = "mutomo", version, about = "Muon and muonium spin tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a state and tabulate reduced tomograms and entanglement.
    Evolve(EvolveArgs),
    /// Monte Carlo positron histograms and the tomogram estimated from them.
    Simulate(SimulateArgs),
    /// Reconstruct the initial two-spin state from reduced tomograms.
    Reconstruct(ReconstructArgs),
    /// Largest Bell-like number over measurement directions.
    Bell(BellArgs),
    /// Material summary: critical field, propagators, identifiability.
    Report(ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve(a) => commands::evolve(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Reconstruct(a) => commands::reconstruct(&a),
        Command::Bell(a) => commands::bell(&a),
        Command::Report(a) => commands::report(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
