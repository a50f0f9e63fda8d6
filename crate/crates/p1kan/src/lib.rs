//! Experiment harness for P1-KAN and MLP function approximation: training
//! loop with periodic high-sample evaluation, CSV metrics, binary checkpoints,
//! the MLP architecture sweep, and target-function grid dumps.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod model;
pub mod sweep;
pub mod train;

pub use checkpoint::{load_model, save_model, CheckpointError};
pub use config::{ExperimentConfig, FunctionArg, ModelKind};
pub use error::HarnessError;
pub use metrics::{read_metrics_csv, write_metrics_csv, MetricRow, MetricsLog, RunStatus};
pub use model::Model;
pub use sweep::{sweep_mlp, SweepEntry, SweepOutcome, MLP_SWEEP};
pub use train::{build_model, evaluate_model, train, TrainOutcome};
