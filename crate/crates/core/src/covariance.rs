//! Covariance matrices of the state vector `(X_1, ..., X_n)`.

use alloc::vec::Vec;

use crate::controllers::ControllerSpec;
use crate::dd::DoubleDouble;
use crate::error::{non_unit_gain, positive, require, stable_gain, Error, Result};
use crate::linalg::CovMatrix;
use crate::system::SystemParams;

/// Covariance of the uncontrolled state vector started from `X_0 ~ N(0, sigma_0^2)`:
///
/// `[Sigma]_{ij} = s / (1 - a^2) (a^{|i-j|} - a^{i+j}) + sigma_0^2 a^{i+j}`, 1-based,
/// with `s = sigma_Z^2`.
///
/// Evaluated in double-double so that entries for `|a| > 1`, which grow like
/// `a^{2n}`, lose nothing to cancellation before the final rounding.
pub fn state_covariance(params: &SystemParams, n: usize) -> Result<CovMatrix> {
    let a = params.gain_a;
    non_unit_gain(a)?;
    require(n >= 1, "n", "n >= 1", n as f64)?;
    let pow = DoubleDouble::power_table(a, 2 * n);
    let s = DoubleDouble::from(params.noise_variance());
    let s0 = DoubleDouble::from(params.init_variance());
    let one = DoubleDouble::ONE;
    let ad = DoubleDouble::from(a);
    let scale = s / (one - ad * ad);
    Ok(CovMatrix::from_upper_fn(n, |i, j| {
        // 0-based (i, j) -> 1-based exponents
        let lag = pow[j - i];
        let sum = pow[i + j + 2];
        (scale * (lag - sum) + s0 * sum).to_f64()
    }))
}

/// Stationary covariance `s / (1 - a^2) a^{|i-j|}`.
pub fn stationary_covariance(a: f64, sigma_z: f64, n: usize) -> Result<CovMatrix> {
    stable_gain(a)?;
    positive("sigma_z", sigma_z)?;
    require(n >= 1, "n", "n >= 1", n as f64)?;
    let var = sigma_z * sigma_z / (1.0 - a * a);
    let mut pow = Vec::with_capacity(n);
    let mut p = 1.0;
    for _ in 0..n {
        pow.push(p);
        p *= a;
    }
    Ok(CovMatrix::from_upper_fn(n, |i, j| var * pow[j - i]))
}

/// Covariance after a single reset to the stationary law between `X_tau` and
/// `X_{tau+1}`: `diag(Sigma_tau, Sigma_{n-tau})`.
pub fn reset_covariance(a: f64, sigma_z: f64, n: usize, tau: usize) -> Result<CovMatrix> {
    stable_gain(a)?;
    require(tau >= 1 && tau < n, "tau", "1 <= tau < n", tau as f64)?;
    let head = stationary_covariance(a, sigma_z, tau)?;
    let tail = stationary_covariance(a, sigma_z, n - tau)?;
    Ok(head.block_diag(&tail))
}

/// Covariance of `(X_1, ..., X_n)` under `controller`, when the law is Gaussian
/// with a closed form (no control, gain change, single stationary reset).
pub fn trajectory_covariance(
    params: &SystemParams,
    controller: &ControllerSpec,
    n: usize,
) -> Result<CovMatrix> {
    match *controller {
        ControllerSpec::None => state_covariance(params, n),
        ControllerSpec::GainChange { b } => {
            controller.check_admissible(params)?;
            let closed =
                SystemParams::new(b, params.noise, params.initial_variance_under(controller))?;
            state_covariance(&closed, n)
        }
        ControllerSpec::ResetOnce { tau } => {
            controller.check_admissible(params)?;
            reset_covariance(params.gain_a, params.noise.std_dev(), n, tau)
        }
        ControllerSpec::OneBit { .. } | ControllerSpec::Threshold { .. } => {
            Err(Error::NotGaussian {
                controller: controller.name(),
            })
        }
    }
}
