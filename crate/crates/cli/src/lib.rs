//! Command-line experiments for the softqec decoders: configuration files
//! and presets, sweeps with threshold fits, measurement-time scans, model
//! validation and graph export.

pub mod commands;
pub mod config;

use std::fmt;

/// Failure of a command, mapped to the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Invalid configuration or input file (exit code 1).
    Config(String),
    /// Failure while running (exit code 2).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<softqec::Error> for CliError {
    fn from(e: softqec::Error) -> Self {
        match e {
            softqec::Error::InvalidParameter(m) => CliError::Config(m),
            softqec::Error::InvalidDistance(d) => CliError::Config(format!("invalid distance {d}")),
            e => CliError::Runtime(e.to_string()),
        }
    }
}
