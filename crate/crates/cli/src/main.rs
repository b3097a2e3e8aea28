//! `osgood`: command-line front end for the transport, flow, and envelope
//! toolkit. Every run writes CSV tables plus a `manifest.json` that echoes
//! the resolved configuration, seeds, grids, and tolerances, so a run
//! directory is reproducible byte for byte from its manifest.
//!
//! Exit codes: 0 on success, 2 when inputs violate a stated assumption
//! (arguments, config file, domain preconditions), 3 when an algorithm
//! fails to reach its numerical target.

mod commands;
mod report;
mod settings;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "osgood",
    version,
    about = "Transport equations, flows, and envelope bounds for rough velocity fields"
)]
struct Cli {
    #[command(flatten)]
    overrides: settings::Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a characteristic ensemble and tabulate the trajectories.
    Flow(commands::FlowArgs),
    /// Solve a transport problem along characteristics.
    #[command(subcommand)]
    Solve(commands::SolveCmd),
    /// Re-solve a recorded scenario and check a certificate against it.
    #[command(subcommand)]
    Verify(commands::VerifyCmd),
    /// Dyadic lower-envelope decomposition with per-layer bounds.
    Envelope(commands::EnvelopeArgs),
    /// One-number transport bounds for a non-negative profile.
    #[command(subcommand)]
    Bound(commands::BoundCmd),
    /// Refined Stieltjes pairing with an error certificate.
    Young(commands::YoungArgs),
    /// p-variation of a sampled profile over its span.
    Pvar(commands::PvarArgs),
    /// Monte Carlo vanishing-viscosity sweep toward the transport solution.
    Viscous(commands::ViscousArgs),
    /// Preset catalogs.
    #[command(subcommand)]
    Presets(commands::PresetsCmd),
}

#[derive(Debug)]
pub enum CliError {
    /// Arguments or configuration violate a stated assumption.
    Usage(String),
    Core(osgood_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<osgood_core::Error> for CliError {
    fn from(e: osgood_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(osgood_core::Error::Numerical(_)) => 3,
            CliError::Core(_) => 2,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = settings::resolve(&cli.overrides).and_then(|s| commands::run(cli.command, &s));
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
