//! Experiment runner: configuration, the full comparison run, and the
//! files it writes.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{Method, RunConfig};
pub use experiment::{audit, cmd_curves, cmd_preprocess, cmd_run, ExperimentReport};
