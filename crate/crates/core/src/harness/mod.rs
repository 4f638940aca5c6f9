//! Experiment orchestration from a config file to CSV/JSON outputs.

pub mod config;
pub mod run;
pub mod study;

pub use config::{ConfigError, ExperimentConfig, Mode, SCHEMA_VERSION};
pub use run::{run, write_outputs, Experiment, ExperimentReport, RunError, Status};
pub use study::{converge, prediction_table, sweep, write_convergence, write_sweep, ConvergenceReport, StudyError, Sweep, SweepReport};
