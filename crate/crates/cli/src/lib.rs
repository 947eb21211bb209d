//! Command-line front end: configuration files, experiment sweeps with CSV
//! output, single-episode traces and the brute-force validation suite.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod validate;

pub use config::RunConfig;
pub use error::CliError;
