//! `squeeze`: conditional-state estimation for a continuously measured oscillator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::output::Destination;

#[derive(Parser, Debug)]
#[command(name = "squeeze", version, about, args_override_self = true)]
struct Cli {
    /// `key = value` file; keys are flag names, command-line flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<std::path::PathBuf>,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true, value_name = "FILE")]
    output: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derived rates, filter coefficients, covariance and regime as JSON.
    Derive(commands::derive::Args),
    /// V_min, purity and regime over an (n_th, C) grid, with boundary curves.
    RegimeMap(commands::regime_map::Args),
    /// Optimal quadrature variance with and without the RWA along n_th.
    VarianceCurve(commands::variance_curve::Args),
    /// Wigner density of the conditional state on a grid.
    Wigner(commands::wigner::Args),
    /// Causal filter response and achieved covariance, optionally under excess noise.
    Filter(commands::filter::Args),
    /// Monte Carlo records scored against the optimal filters.
    Simulate(commands::simulate::Args),
    /// S_qq, S_YY and filter gains over frequency.
    Spectra(commands::spectra::Args),
}

/// Bad input that is not a core validation failure.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<squeeze_core::Error>() {
            return if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_NUMERICAL
            };
        }
    }
    EXIT_VALIDATION
}

fn run(argv: Vec<OsString>) -> anyhow::Result<()> {
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let first = Cli::from_arg_matches(&matches)?;
    let argv = match &first.config {
        Some(path) => config::merge(&argv, path)?,
        None => argv,
    };
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let cli = Cli::from_arg_matches(&matches)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let resolved = config::Resolved::from_matches(name, sub);
    let dest = Destination::new(cli.output.as_deref());
    match &cli.command {
        Command::Derive(a) => commands::derive::run(a, &resolved, &dest),
        Command::RegimeMap(a) => commands::regime_map::run(a, &resolved, &dest),
        Command::VarianceCurve(a) => commands::variance_curve::run(a, &resolved, &dest),
        Command::Wigner(a) => commands::wigner::run(a, &resolved, &dest),
        Command::Filter(a) => commands::filter::run(a, &resolved, &dest),
        Command::Simulate(a) => commands::simulate::run(a, &resolved, &dest),
        Command::Spectra(a) => commands::spectra::run(a, &resolved, &dest),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
