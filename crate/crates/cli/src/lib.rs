//! Configuration ingestion, command dispatch and canonical report emission
//! for the modlab command-line tool.

pub mod config;
pub mod emit;
pub mod error;
pub mod run;

pub use config::{parse_config, parse_grid, parse_list, Command, RunConfig};
pub use error::CliError;
pub use run::{execute, Overrides, Output};
