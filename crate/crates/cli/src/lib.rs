//! Declarative experiment runner: configuration files, seeded replicate
//! campaigns, and their output files.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use report::emit_summary;
pub use runner::{run_experiment, PlotData, ResultRecord, RunError, RunOutput};
