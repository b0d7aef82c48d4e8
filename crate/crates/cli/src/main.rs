//! `horoflow` command line tool.
//!
//! Every subcommand loads one JSON model, prints a short `key=value`
//! summary on standard output and, with `--out DIR`, writes CSV tables and a
//! `manifest.json` describing the run. Exit codes: 0 success, 2 bad input,
//! 3 numerical failure, 4 model hypothesis violated.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use horoflow::ErrorKind;

use crate::args::Cli;

/// Failure of a run, classified for the exit code.
#[derive(Debug)]
pub enum CliError {
    Core(horoflow::Error),
    Input(String),
}

impl From<horoflow::Error> for CliError {
    fn from(e: horoflow::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl CliError {
    fn kind(&self) -> (&'static str, u8) {
        match self {
            CliError::Input(_) => ("input", 2),
            CliError::Core(e) => match e.kind() {
                ErrorKind::Input => ("input", 2),
                ErrorKind::Numerical => ("numerical", 3),
                ErrorKind::ModelInvariant => ("model_invariant", 4),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Input(s) => s.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = e.kind();
            let report = serde_json::json!({ "error": kind, "message": e.message() });
            eprintln!("{report}");
            ExitCode::from(code)
        }
    }
}
