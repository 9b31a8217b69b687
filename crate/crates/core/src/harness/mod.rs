//! Continual-learning experiments: configuration, runs, metrics and output.

pub mod config;
pub mod export;
pub mod gradcheck;
pub mod metrics;
pub mod output;
pub mod runner;

pub use config::{ExperimentConfig, OptimizerSpec, Problem, TaskSpec, KEYS};
pub use export::{export_features, write_features_csv};
pub use gradcheck::{grad_check, relative_error};
pub use metrics::{aggregate_runs, bin_errors, drift_norm, AggregateCurve, MetricsRow, RunSummary};
pub use output::{write_aggregate_csv, write_experiment, write_metrics_csv, Metadata};
pub use runner::{
    initial_network, run_experiment, run_single, Example, ExampleStream, ExperimentResult,
    MnistData, RunResult,
};
