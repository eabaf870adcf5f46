//! Monte Carlo harness for the `rotavg` estimators.
//!
//! A sweep runs every (method, rejection) variant over a grid of inlier noise
//! levels and outlier ratios. Within a grid cell each trial draws one
//! synthetic instance from a seed derived from `(base_seed, σ-index,
//! ratio-index, trial)` and feeds that same instance to every variant, so
//! method comparisons are paired.

pub mod csv;
pub mod summary;
pub mod sweep;

use thiserror::Error;

pub use csv::{emit_csv, parse_csv, write_csv, CSV_HEADER};
pub use summary::emit_summary;
pub use sweep::{
    aggregate, run_sweep, sub_seed, CellAggregate, RejectionMode, Sweep, SweepConfig, TrialRecord,
    Variant,
};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no records to write")]
    NoRecords,
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Averaging(#[from] rotavg::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
