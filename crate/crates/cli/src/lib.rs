//! Command-line front end for the `ambient-attitude` library: runs scenario
//! files, writes trajectory CSVs, and exposes the linearization and gain
//! checks.

pub mod cli;
pub mod commands;
pub mod config;
pub mod csv;
pub mod error;
pub mod matrix_arg;
pub mod summary;

pub use cli::{run, Cli};
pub use error::{CliError, CliResult};
