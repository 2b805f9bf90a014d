//! Batch front end for the eqed library: reads a TOML run configuration,
//! dispatches subcommands and writes reports atomically.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
            CliError::ResourceLimit(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "eqed", version, about = "Effective QED Hamiltonians, circuits and resource estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides [output].directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed; overrides [mc].seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Check the compiled circuit against exact evolution.
    #[arg(long, global = true)]
    pub verify: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Build the Hamiltonian, dump its terms and check it.
    Build,
    /// Compile a Trotter circuit and count gates.
    Compile,
    /// T-gate sweep and the gold cutoff report.
    Estimate,
    /// Commutator Monte Carlo campaign.
    Mc,
    /// Givens circuit for a Slater determinant.
    Stateprep,
    /// Planewave cutoff from the Dirac ground state.
    Cutoff,
    /// Check the GHZ diagonalization table.
    VerifyAppendix,
}

/// Runs one invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("eqed: {e}");
            e.exit_code()
        }
    }
}
