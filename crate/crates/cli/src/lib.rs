//! Experiment driver for learning term-weighting schemes.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
