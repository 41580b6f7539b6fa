//! Covert control of first-order autoregressive systems.
//!
//! The plant is the scalar AR(1) recursion `X_n = a X_{n-1} + Z_n - U_n`,
//! where `Z_n` is i.i.d. noise and `U_n` is a causal control signal chosen by
//! a controller that wants to stay hidden from an observer of `X_n`. This
//! crate holds everything that is pure computation:
//!
//! - [`system`]: the plant, seeded trajectory simulation.
//! - [`covariance`]: Gaussian covariance matrices of state vectors.
//! - [`controllers`]: one-bit, threshold, gain-change and reset control laws.
//! - [`detectors`]: the observer's decision rules and their designs.
//! - [`analysis`]: Gaussian KL divergence, error-sum bounds, closed-form
//!   trace/inverse/determinant identities and covertness limits.
//! - [`linalg`], [`special`], [`quad`], [`dd`], [`rng`]: numerical support.
//!
//! The crate is `no_std` and needs only `alloc`. Monte Carlo harnesses, file
//! formats and the command line live in the `covertctl` companion crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(
    clippy::excessive_precision,
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord
)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod controllers;
pub mod covariance;
pub mod dd;
pub mod detectors;
mod error;
pub mod linalg;
pub mod noise;
pub mod quad;
pub mod rng;
pub mod special;
pub mod system;

pub use analysis::{BoundDirection, BoundReport};
pub use controllers::{ControllerSpec, EnergyBounds};
pub use covariance::{
    reset_covariance, state_covariance, stationary_covariance, trajectory_covariance,
};
pub use detectors::{Decision, Detector, DetectorSpec};
pub use error::{Error, Result};
pub use linalg::{Cholesky, CovMatrix, Matrix};
pub use noise::NoiseModel;
pub use rng::SampleStream;
pub use system::{simulate, simulate_stream, step, SystemParams, Trajectory};
