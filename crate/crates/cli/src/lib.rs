//! Configuration and subcommands of the `mixvol` binary.

use std::fmt;

pub mod config;
pub mod run;

pub use config::{Command, RunConfig};
pub use run::{run, Settings};

/// Exit code when at least one requested fit did not converge.
pub const EXIT_CONVERGENCE: u8 = 4;

/// Failure classes that abort a run.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable, malformed or inconsistent configuration.
    Config(String),
    /// Input files or their contents cannot be used.
    Data(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl std::error::Error for Failure {}
