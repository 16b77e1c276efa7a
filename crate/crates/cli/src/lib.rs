//! Config-driven front end for the `geqm` library: parse a TOML run
//! configuration, hand it to one of three commands (run / check / spectrum),
//! and render the result as CSV or JSON.
//!
//! Exit-code contract of the binary:
//!
//! * `0` — success (all checks passed, if any ran)
//! * `1` — an invariant check failed
//! * `2` — configuration or usage error
//! * `3` — numeric failure (indefinite metric, non-diagonalizable operator, …)

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_check, cmd_run, cmd_spectrum, CheckResult, Column, Report};
pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] geqm::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// The binary's exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 2,
        }
    }
}
