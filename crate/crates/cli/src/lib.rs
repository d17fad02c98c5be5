//! Experiment harness for the `nagc` crate: dataset specs, run records,
//! restarts, hyperparameter grids and timing.

pub mod commands;
pub mod dataset;
pub mod error;
pub mod record;

pub use commands::{
    cmd_bench, cmd_fit, cmd_grid, cmd_restarts, read_grid_csv, resolve_k1, select_best, write_grid_csv, BenchReport,
    GridOutcome, GridRow, GridSpec, RestartsOutcome,
};
pub use dataset::{DatasetSpec, LoadedDataset};
pub use error::HarnessError;
pub use record::{Method, RestartSummary, RunRecord, Stat};
