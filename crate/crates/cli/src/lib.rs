//! Command-line front end for `gnse-core`: config parsing, the `eig`,
//! `solve` and `control` commands, and the `verify` self-check suite.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod verify;

pub use config::{ConfigError, RunConfig, CONFIG_HELP};

/// Process exit codes. Math failures are kept apart from plumbing failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Error = 1,
    /// The smallness hypothesis on `g` fails.
    Hypothesis = 2,
    /// An a-priori bound is violated.
    Certificate = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] gnse_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
