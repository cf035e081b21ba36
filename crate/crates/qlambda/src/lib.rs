//! Command-line driver for `qlambda-core`: TOML configuration, CSV/JSON
//! formats and the `qlambda` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;

pub use commands::{run, Cli};
pub use error::CliError;
