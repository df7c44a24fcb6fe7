//! `pam`: command-line front end for pam-core.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use pam_core::PamError;

use crate::config::{Cli, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numeric(PamError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(PamError::NonConvergence { .. } | PamError::Quadrature { .. }) => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl From<PamError> for CliError {
    fn from(e: PamError) -> Self {
        CliError::Numeric(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli.command).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pam: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
