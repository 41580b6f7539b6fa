//! Closed-form analytics: Gaussian KL divergence, error-sum bounds, the
//! stationary AR(1) matrix identities and the covertness/detectability limits.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{positive, probability_open, require, stable_gain, Error, Result};
use crate::linalg::CovMatrix;
use crate::special::q_inverse;

/// Which side of the bounded quantity the value limits. For error-sum
/// bounds the quantity is `alpha + beta`; for gain and sample-count limits it
/// is the gain or count itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum BoundDirection {
    /// quantity `<= value`.
    Upper,
    /// quantity `>= value`.
    Lower,
}

/// A named bound value with the inputs that produced it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub inputs: BTreeMap<String, f64>,
    pub direction: BoundDirection,
}

impl BoundReport {
    pub fn new(
        name: &str,
        value: f64,
        direction: BoundDirection,
        inputs: &[(&str, f64)],
    ) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::Numerical {
                what: "bound value",
                value,
            });
        }
        Ok(Self {
            name: name.to_string(),
            value,
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            direction,
        })
    }

    /// Covertness target `alpha + beta >= 1 - epsilon`.
    pub fn covertness(epsilon: f64) -> Result<Self> {
        positive("epsilon", epsilon)?;
        Self::new(
            "covertness",
            1.0 - epsilon,
            BoundDirection::Lower,
            &[("epsilon", epsilon)],
        )
    }

    /// Detection target `alpha + beta <= delta`.
    pub fn detection(delta: f64) -> Result<Self> {
        probability_open("delta", delta)?;
        Self::new(
            "detection",
            delta,
            BoundDirection::Upper,
            &[("delta", delta)],
        )
    }
}

/// `D(N(mu0, cov0) || N(mu1, cov1))` in nats, via Cholesky of `cov1` and `cov0`.
///
/// Tiny negative results from cancellation (above `-1e-10`) are clamped to 0.
pub fn gaussian_kl(mu0: &[f64], cov0: &CovMatrix, mu1: &[f64], cov1: &CovMatrix) -> Result<f64> {
    let n = cov0.dim();
    for found in [cov1.dim(), mu0.len(), mu1.len()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    let l0 = cov0.cholesky()?;
    let l1 = cov1.cholesky()?;
    let trace = l1.trace_solve(&cov0.to_matrix())?;
    let diff: Vec<f64> = mu1.iter().zip(mu0).map(|(a, b)| a - b).collect();
    let maha = l1.inv_quad_form(&diff)?;
    let kl = 0.5 * (trace + maha - n as f64 + l1.log_det() - l0.log_det());
    clamp_kl(kl)
}

fn clamp_kl(kl: f64) -> Result<f64> {
    if kl >= 0.0 {
        Ok(kl)
    } else if kl > -1e-10 {
        Ok(0.0)
    } else {
        Err(Error::Numerical {
            what: "KL divergence",
            value: kl,
        })
    }
}

/// `max(0, 1 - sqrt(kl / 2))`: a lower bound on `alpha + beta` for any test.
pub fn error_sum_lower_bound(kl: f64) -> f64 {
    let v = 1.0 - libm::sqrt(libm::fmax(kl, 0.0) / 2.0);
    libm::fmax(v, 0.0)
}

/// `tr(Sigma_b^{-1} Sigma_a)` for stationary covariances of gains `a` and `b`:
/// `((n - 2) b^2 - 2 (n - 1) a b + n) / (1 - a^2)`.
pub fn trace_ratio_ss(a: f64, b: f64, n: usize) -> Result<f64> {
    stable_gain(a)?;
    stable_gain(b)?;
    require(n >= 1, "n", "n >= 1", n as f64)?;
    let n = n as f64;
    Ok(((n - 2.0) * b * b - 2.0 * (n - 1.0) * a * b + n) / (1.0 - a * a))
}

/// Tridiagonal inverse of the stationary covariance.
pub fn stationary_inverse(a: f64, sigma_z: f64, n: usize) -> Result<CovMatrix> {
    stable_gain(a)?;
    positive("sigma_z", sigma_z)?;
    require(n >= 1, "n", "n >= 1", n as f64)?;
    let s = sigma_z * sigma_z;
    if n == 1 {
        return Ok(CovMatrix::from_upper_fn(1, |_, _| (1.0 - a * a) / s));
    }
    Ok(CovMatrix::from_upper_fn(n, |i, j| {
        if i == j {
            let interior = i >= 1 && i + 1 < n;
            if interior {
                (1.0 + a * a) / s
            } else {
                1.0 / s
            }
        } else if j == i + 1 {
            -a / s
        } else {
            0.0
        }
    }))
}

/// `log |Sigma_n| = n log(s / (1 - a^2)) + (n - 1) log(1 - a^2)`.
pub fn stationary_logdet(a: f64, sigma_z: f64, n: usize) -> Result<f64> {
    stable_gain(a)?;
    positive("sigma_z", sigma_z)?;
    require(n >= 1, "n", "n >= 1", n as f64)?;
    let s = sigma_z * sigma_z;
    let r = 1.0 - a * a;
    let n = n as f64;
    Ok(n * libm::log(s / r) + (n - 1.0) * libm::log(r))
}

/// KL between the stationary law and the law after one stationary reset:
/// `0.5 log(1 / (1 - a^2))`, independent of the reset time and the horizon.
pub fn reset_kl(a: f64) -> Result<f64> {
    stable_gain(a)?;
    Ok(-0.5 * libm::log1p(-a * a))
}

/// Weighted average of per-time KL values, an upper bound on the KL to the
/// mixture over reset times.
pub fn mixture_kl_upper_bound(kl_per_tau: &[f64], p_tau: &[f64]) -> Result<f64> {
    if kl_per_tau.len() != p_tau.len() {
        return Err(Error::DimensionMismatch {
            expected: kl_per_tau.len(),
            found: p_tau.len(),
        });
    }
    require(!p_tau.is_empty(), "p_tau", "non-empty", 0.0)?;
    let mut total = 0.0;
    for &p in p_tau {
        require(p >= 0.0 && p.is_finite(), "p_tau", "p >= 0", p)?;
        total += p;
    }
    require(
        libm::fabs(total - 1.0) <= 1e-12,
        "sum(p_tau)",
        "sums to 1",
        total,
    )?;
    let mut acc = 0.0;
    for (&kl, &p) in kl_per_tau.iter().zip(p_tau) {
        require(kl >= 0.0 && kl.is_finite(), "kl", "kl >= 0", kl)?;
        acc += kl * p;
    }
    Ok(acc)
}

/// Largest `|b|` keeping a gain change from `a` to `b` epsilon-covert:
/// `sqrt(1 - (1 - a^2) e^{-4 eps^2})`.
pub fn covert_gain_bound(a: f64, epsilon: f64) -> Result<f64> {
    stable_gain(a)?;
    require(a != 0.0, "a", "0 < |a| < 1", a)?;
    positive("epsilon", epsilon)?;
    Ok(libm::sqrt(
        1.0 - (1.0 - a * a) * libm::exp(-4.0 * epsilon * epsilon),
    ))
}

/// Largest `|a|` for which a single stationary reset is epsilon-covert:
/// `sqrt(1 - e^{-4 eps^2})`.
pub fn reset_covert_bound(epsilon: f64) -> Result<f64> {
    positive("epsilon", epsilon)?;
    Ok(libm::sqrt(-libm::expm1(-4.0 * epsilon * epsilon)))
}

/// Smallest `|a|` at which a known-time reset is detectable with
/// `alpha + beta <= delta` by the chi-square test.
pub fn reset_detect_gain_bound(delta: f64) -> Result<f64> {
    probability_open("delta", delta)?;
    let qa = q_inverse(delta / 4.0);
    let qb = q_inverse((2.0 - delta) / 4.0);
    let (qa2, qb2) = (qa * qa, qb * qb);
    Ok(libm::sqrt(libm::fmax((qa2 - qb2) / (qa2 + qb2), 0.0)))
}

/// KL from the stationary law of gain `a` to that of gain `b`:
/// `0.5 (tr(Sigma_b^{-1} Sigma_a) - n + log((1 - a^2) / (1 - b^2)))`.
pub fn gain_change_kl(a: f64, b: f64, n: usize) -> Result<f64> {
    let tr = trace_ratio_ss(a, b, n)?;
    let kl = 0.5 * (tr - n as f64 + libm::log((1.0 - a * a) / (1.0 - b * b)));
    clamp_kl(kl)
}

/// The relaxed error-sum bound `1 - 0.5 sqrt(log((1 - a^2) / (1 - b^2)))`
/// obtained by dropping the (negative) trace term of [`gain_change_kl`]; valid
/// when `n < 2b / (b - a)`.
pub fn gain_change_relaxed_bound(a: f64, b: f64) -> Result<f64> {
    stable_gain(a)?;
    stable_gain(b)?;
    let ratio = libm::log((1.0 - a * a) / (1.0 - b * b));
    require(ratio >= 0.0, "b", "|b| >= |a|", b)?;
    Ok(1.0 - 0.5 * libm::sqrt(ratio))
}

/// Observation window `2b / (b - a)` below which the trace term is negative.
pub fn gain_change_window(a: f64, b: f64) -> Result<f64> {
    require(a != b, "b", "b != a", b)?;
    Ok(2.0 * b / (b - a))
}

/// Bound report for a gain change observed over `n` samples: the tight value
/// `1 - sqrt(kl / 2)`, with the relaxed value echoed in the inputs.
pub fn gain_change_report(a: f64, b: f64, n: usize) -> Result<BoundReport> {
    let kl = gain_change_kl(a, b, n)?;
    let relaxed = gain_change_relaxed_bound(a, b)?;
    BoundReport::new(
        "gain_change_error_sum",
        error_sum_lower_bound(kl),
        BoundDirection::Lower,
        &[
            ("a", a),
            ("b", b),
            ("n", n as f64),
            ("kl", kl),
            ("relaxed", relaxed),
        ],
    )
}

/// Bound report for a single stationary reset.
pub fn reset_report(a: f64) -> Result<BoundReport> {
    let kl = reset_kl(a)?;
    BoundReport::new(
        "reset_error_sum",
        error_sum_lower_bound(kl),
        BoundDirection::Lower,
        &[("a", a), ("kl", kl)],
    )
}
