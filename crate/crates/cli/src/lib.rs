//! Batch front end for the half-space heat solver: configuration parsing,
//! command execution, CSV reports and run manifests.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use run::{run, Check, Command, Outcome, RunOptions};
