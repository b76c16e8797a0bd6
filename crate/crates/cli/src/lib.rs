//! Experiment runner behind the `shifterr` binary: configuration, outer
//! replications, result files and the SVG summary.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
