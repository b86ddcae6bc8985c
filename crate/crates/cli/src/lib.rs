//! Command-line front end: argument parsing, design documents and output
//! rendering. The binary is a thin wrapper around [`run`].

pub mod args;
pub mod commands;
pub mod document;
pub mod output;

use std::fmt;

use trendopt_core::DesignError;

pub use args::{Cli, Command, Format};
pub use document::{DesignDocument, SCHEMA_VERSION};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const INVALID_INPUT: u8 = 1;
    pub const INFEASIBLE: u8 = 2;
    pub const BUDGET_EXCEEDED: u8 = 3;
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Io(String),
    Engine(DesignError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Engine(DesignError::Infeasible { .. }) => exit::INFEASIBLE,
            CliError::Engine(DesignError::BudgetExceeded { .. }) => exit::BUDGET_EXCEEDED,
            _ => exit::INVALID_INPUT,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "invalid input: {msg}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
            CliError::Engine(DesignError::Infeasible {
                reason,
                smallest_b: Some(b),
            }) => write!(f, "infeasible: {reason}\nsmallest feasible b: {b}"),
            CliError::Engine(DesignError::BudgetExceeded { required, budget }) => write!(
                f,
                "budget exceeded: {required} candidates to enumerate, budget is {budget} \
                 (raise it with --budget or {})",
                args::BUDGET_ENV
            ),
            CliError::Engine(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<DesignError> for CliError {
    fn from(e: DesignError) -> Self {
        CliError::Engine(e)
    }
}

/// Executes a parsed command and returns the rendered output.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let report = commands::execute(&cli.command)?;
    output::render(&report, cli.format)
}
