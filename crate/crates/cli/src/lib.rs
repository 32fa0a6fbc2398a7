//! Command-line front end for the GHZ distribution models: configuration
//! loading, figure-style parameter sweeps as CSV, and the validation report
//! comparing closed forms against the simulator and the density-matrix
//! calculator.

pub mod config;
pub mod sweep;
pub mod validate;

use thiserror::Error;

pub use config::{AxisScale, AxisSpec, ModeFlags, SweepConfig};
pub use sweep::{
    run_decision_boundary, run_distance_curves, run_parent_fidelity_sweep, run_parent_rate_sweep,
    DecisionGrid, Metric, Winner,
};
pub use validate::{run_validation, ValidationReport};

/// Process exit codes: 0 success, 1 validation hard-failure, 2 bad
/// configuration, 3 I/O failure.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Model-level failures surface as configuration errors: they mean the
    /// requested parameter point is outside the model's domain.
    pub fn model(err: ghznet::Error) -> Self {
        CliError::Config(err.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}
