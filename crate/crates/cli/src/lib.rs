//! Batch front end for the resdecay engine: configuration, subcommands and
//! output files.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{config_hash, run, Command};
pub use config::{RunConfig, OUT_ENV};
pub use error::CliError;
