//! File formats, configuration and the `epp` command-line tool built on
//! [`epp_core`].

use std::fmt;

pub mod app;
pub mod bench;
pub mod commands;
pub mod config;
pub mod report;

pub use bench::{emit_bench, parse_bench, BenchError};
pub use config::{ConfigFile, Format, Overrides, RunConfig};

/// A failed run, split by exit status.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    /// Bad flags or configuration (exit status 2).
    Usage(String),
    /// Unreadable or invalid netlist, analysis or IO failure (exit status 1).
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}
