//! `plasmon`: reflectance curves, inflection points, enhancement ratios and
//! precision sweeps for a Kretschmann sensor probed with twin-mode light.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{CommonArgs, Settings};

/// Exit status for failed validation checks.
const EXIT_VALIDATION: u8 = 1;
/// Exit status for bad configuration or input.
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "plasmon", version, about = "Quantum-enhanced SPR sensing sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reflectance vs incidence angle for each analyte index
    Reflectance(CommonArgs),
    /// Reflectance and sensitivity vs analyte index at fixed angle
    IndexSweep(CommonArgs),
    /// Inflection index vs incidence angle
    Inflection(CommonArgs),
    /// Enhancement ratio vs analyte index per (state, N, eta)
    Ratio(CommonArgs),
    /// Precision at the inflection point vs angle for each state family
    Precision(CommonArgs),
    /// Cross-check closed forms against the Fock-space and transfer-matrix oracles
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Perturb the ratio denominator (negative control)
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Reflectance(args) => commands::reflectance(&Settings::resolve(&args)?)?,
        Command::IndexSweep(args) => commands::index_sweep(&Settings::resolve(&args)?)?,
        Command::Inflection(args) => commands::inflection(&Settings::resolve(&args)?)?,
        Command::Ratio(args) => commands::ratio(&Settings::resolve(&args)?)?,
        Command::Precision(args) => commands::precision(&Settings::resolve(&args)?)?,
        Command::Validate { common, inject_fault } => {
            return commands::validate(&Settings::resolve(&common)?, inject_fault);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
