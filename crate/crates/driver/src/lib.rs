//! Configuration-driven experiments: read a TOML experiment, run the
//! selected pipeline and write deterministic JSON and CSV artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::ExperimentConfig;
pub use error::DriverError;
pub use pipeline::{run_experiment, Command, Summary};
