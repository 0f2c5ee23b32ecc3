//! Experiment driver for the accelerated forward-backward solvers: loads a
//! configured problem, runs a set of momentum schedules and writes trace,
//! summary, table and rate-diagnostic files.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{ExperimentConfig, Overrides};
pub use error::{HarnessError, Result};
pub use experiment::{run_compare, run_rates, run_table, CompareOutcome, Experiment};
