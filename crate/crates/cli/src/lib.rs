//! Library side of the `unilogic` command: run manifests, model files, the
//! benchmark protocol and squashing-curve tables.

pub mod benchmark;
pub mod commands;
pub mod curves;
pub mod manifest;

use std::fmt;

/// Failure of a command, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Missing input file or unusable arguments.
    Input(String),
    /// Training diverged.
    Numeric(String),
    /// Model and data disagree on shape.
    Mismatch(String),
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Mismatch(_) => 4,
            CliError::Other(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m)
            | CliError::Numeric(m)
            | CliError::Mismatch(m)
            | CliError::Other(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<unilogic::Error> for CliError {
    fn from(e: unilogic::Error) -> Self {
        use unilogic::Error as E;
        match &e {
            E::NumericFailure { .. } => CliError::Numeric(e.to_string()),
            E::Shape { .. } => CliError::Mismatch(e.to_string()),
            E::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
                CliError::Input(e.to_string())
            }
            E::Config(_) => CliError::Input(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Input(e.to_string())
        } else {
            CliError::Other(e.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
