//! Experiment harness: configuration, multi-run execution, trace files,
//! statistical summaries, plots and the one-dimensional demo.

pub mod config;
pub mod demo;
pub mod error;
pub mod experiment;
pub mod plot;
pub mod report;
pub mod trace_io;

pub use config::{ExperimentConfig, ObjectiveConfig};
pub use error::HarnessError;
pub use experiment::{compare, run_experiment, ExperimentOutcome, Manifest};
