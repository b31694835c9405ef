//! Experiment configs, orchestration and CSV artifacts behind the `repdyn`
//! binary.

mod config;
mod run;

pub use config::{
    parse_config, parse_config_for, BlobParams, Command, ExperimentConfig, MetricKind, MetricsParams, SweepParams,
    TrainParams,
};
pub use run::{
    metric_rows, run_experiment, Artifact, Manifest, MANIFEST_FILE, METRICS_FILE, METRICS_HEADER, MODEL_FILE,
    SWEEP_AGGREGATE_FILE, SWEEP_REPEATS_FILE, TRAJECTORY_FILE,
};
