//! Monte Carlo harness, file formats, oracle suites and the command line for
//! [`covertctl_core`].

pub mod cli;
pub mod error;
pub mod io;
pub mod montecarlo;
pub mod verify;

pub use error::{AppError, AppResult};
pub use montecarlo::{
    estimate_error_rates, sweep, verify_bound, DetectorConfig, ErrorRates, ExperimentConfig,
    Verdict,
};
