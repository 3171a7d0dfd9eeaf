//! File formats, configuration, a thread-pool executor and the command
//! implementations behind the `skt` binary.

pub mod commands;
pub mod config;
pub mod exec;
pub mod output;

use std::fmt;

/// A failure carrying the process exit code it maps to: 1 for
/// configuration and IO problems, 2 for numerical failures, 3 for failed
/// checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn check(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }

    /// Classifies a library error by whether the input or the computation
    /// was at fault.
    pub fn from_core(e: skt_core::Error) -> Self {
        use skt_core::Error::*;
        match e {
            NonPositiveRadicand(_) | NonFiniteState { .. } | NonFiniteField { .. } | CflViolation { .. }
            | NoConvergence { .. } => CliError::numerical(e.to_string()),
            _ => CliError::config(e.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::config(format!("io error: {e}"))
    }
}
