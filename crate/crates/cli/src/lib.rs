//! Library side of the `fairlag` command: run configs, reports and the
//! command implementations, kept here so tests can drive them directly.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use error::{CliError, Result};
