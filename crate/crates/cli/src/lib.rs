//! Command implementations behind the `otmap` binary. Each command takes its
//! resolved settings and an output directory and returns the report it wrote.

pub mod commands;
pub mod config;
pub mod error;
pub mod render;
pub mod report;

pub use error::{CliError, CliResult};
pub use report::Report;
