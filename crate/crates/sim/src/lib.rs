//! Experiment runner for artificial-Doppler side channels between Wi-Fi and
//! BLE: TOML scenarios, Monte-Carlo trials, sweeps, legacy impact, and the
//! CSV and IQ files that come out of them.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod export;
pub mod legacy;
pub mod metrics;
pub mod sweep;
pub mod trace;

use std::path::PathBuf;

pub use config::{Direction, ExperimentConfig};
pub use experiment::{GridPoint, Reading, Scenario, TrialRecord};
pub use metrics::Metrics;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] dopplerfi_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Csv { path: PathBuf, message: String },
    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
