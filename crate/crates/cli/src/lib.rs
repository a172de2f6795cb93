//! Experiment harness for `cspd-core`: TOML-configured sweeps, CSV and JSON
//! output, and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod experiment;
pub mod output;

pub use config::{ConfigError, ExperimentConfig, Overrides};
