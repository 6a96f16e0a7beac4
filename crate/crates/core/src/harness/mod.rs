//! Experiment orchestration: configuration, runs and reports.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::run_experiment;
pub use report::{fit_loglog_slope, write_outputs, Check, LogLogFit, RunReport};
