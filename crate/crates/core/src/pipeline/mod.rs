//! Experiment orchestration: versioned configs, deterministic seeded task
//! sweeps, resumable per-task records, and plot-ready CSV emission.

pub mod config;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind, Method, SCHEMA_VERSION};
pub use run::{run_experiment, RunOptions, RunSummary};
