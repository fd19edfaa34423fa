//! Command-line front end: tables, simulations, verification, error bounds
//! and delay reports on top of [`intraday`].
//!
//! Every command is a plain function returning an [`Output`], so the binary
//! only parses arguments and maps errors to exit codes.

mod args;
mod commands;
mod config;
mod tables;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use args::{parse_and_run, run, Cli, Command, Invocation};
pub use commands::{
    cmd_delay, cmd_errorbound, cmd_simulate, cmd_tables, cmd_verify, cmd_verify_with, DelayOptions, ErrorBoundOptions,
    SimScenario, SimulateOptions, VerifyCliOptions,
};
pub use config::{resolve_config, InitialState, RunConfig, DEFAULT_SEED};
pub use tables::{compute_tables, render_sig3, write_table, Table, TableRow, BELOW_THRESHOLD, TABLE_THRESHOLD};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Validation = 1,
    Verification = 2,
    Io = 3,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Validation(_) => Exit::Validation,
            CliError::Io { .. } => Exit::Io,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation(e.to_string())
            }
        }
    )*};
}
validation_from!(intraday::model::ModelError, intraday::error_bounds::BoundError, intraday::delay::DelayError);

impl From<intraday::simulate::SimError> for CliError {
    fn from(e: intraday::simulate::SimError) -> Self {
        use intraday::simulate::SimError;
        match e {
            SimError::Io { path, source } => CliError::Io { path, source },
            SimError::Csv { path, message } => CliError::Io { path, source: std::io::Error::other(message) },
            other => CliError::Validation(other.to_string()),
        }
    }
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    /// Report for standard output.
    pub text: String,
    pub files: Vec<PathBuf>,
    /// `Success`, or `Verification` when checks ran but some failed.
    pub exit: Exit,
}

impl Output {
    fn ok(text: String, files: Vec<PathBuf>) -> Self {
        Output { text, files, exit: Exit::Success }
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
