//! Experiment harness: reproducible statistical runs on top of the simulator and
//! the limit-law tables. A run is fully determined by an [`ExperimentConfig`] and
//! its seed base; every report echoes the thresholds it was judged against.

pub mod config;
pub mod experiments;
pub mod report;
pub mod stats;

use thiserror::Error;

use crate::clockwork::ClockError;
use crate::engine::EngineError;
use crate::geodesics::GeodesicsError;
use crate::lattice::LatticeError;
use crate::limits::LimitsError;
use crate::tracker::TrackerError;

pub use config::{ExperimentConfig, Thresholds};
pub use experiments::{
    corrupted_replay_detected, run_geodesic_suite, run_identity_suite, run_independence_check,
    run_limit_comparison, run_scaling_and_limit, run_scaling_experiment, run_slow_decorrelation,
    run_step_law, shock_position_batches, write_law_table, PositionBatch,
};
pub use report::{
    ensure_dir, load_report, read_jsonl, write_csv, write_jsonl, CheckResult, Estimate, StatReport,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Geodesics(#[from] GeodesicsError),
    #[error(transparent)]
    Limits(#[from] LimitsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("report: {0}")]
    Report(String),
}
