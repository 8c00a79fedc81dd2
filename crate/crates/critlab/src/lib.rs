//! Experiment runner for `critlab-core`: configuration parsing, the six
//! experiments and CSV/JSON artifacts.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod run;

pub use config::{parse_config, ConfigErrors, Experiment, ExperimentConfig};
pub use output::{CsvTable, ExperimentOutput, Verdict};
pub use run::{execute, run_experiment, RunError, RunManifest};
