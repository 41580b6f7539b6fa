//! The observer's decision rules and their designs.
//!
//! Every rule tests `H0`: no control acts, against `H1`: a controller acts.
//! `reject_null` means the observer declares "controlled".

use alloc::vec::Vec;

use crate::error::{positive, probability_open, require, Error, Result};
use crate::linalg::{Cholesky, CovMatrix};
use crate::noise::NoiseModel;
use crate::special::{q_function, q_inverse};
use crate::system::{SystemParams, Trajectory};

/// Tagged union of the supported detectors.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", deny_unknown_fields))]
pub enum DetectorSpec {
    /// Declare "controlled" iff `|X_{n0}| <= m`.
    Magnitude { m: f64, n0: usize },
    /// Mean squared innovation over `X_1..X_{k+1}` against `sigma_Z^2 + t`.
    InnovationEnergy { k: usize, t: f64 },
    /// `(X_{tau+1} - a X_tau)^2 / sigma_Z^2 > t^2`.
    ResetChiSquare { t: f64, tau: usize },
    /// Optimal quadratic statistic for a known-time reset, `> t_prime`.
    ResetQuadratic { t_prime: f64, tau: usize },
    /// Full Gaussian log-likelihood ratio between `cov0` (H0) and `cov1` (H1).
    #[cfg_attr(feature = "serde", serde(rename = "GaussianLRT"))]
    GaussianLrt {
        cov0: CovMatrix,
        cov1: CovMatrix,
        log_threshold: f64,
    },
}

/// Outcome of one test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decision {
    pub reject_null: bool,
    pub statistic: f64,
    pub threshold: f64,
}

impl DetectorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorSpec::Magnitude { .. } => "Magnitude",
            DetectorSpec::InnovationEnergy { .. } => "InnovationEnergy",
            DetectorSpec::ResetChiSquare { .. } => "ResetChiSquare",
            DetectorSpec::ResetQuadratic { .. } => "ResetQuadratic",
            DetectorSpec::GaussianLrt { .. } => "GaussianLRT",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DetectorSpec::Magnitude { m, n0 } => {
                positive("m", *m)?;
                require(*n0 >= 1, "n0", "n0 >= 1", *n0 as f64)
            }
            DetectorSpec::InnovationEnergy { k, t } => {
                require(*k >= 1, "k", "k >= 1", *k as f64)?;
                positive("t", *t)
            }
            DetectorSpec::ResetChiSquare { t, tau } => {
                positive("t", *t)?;
                require(*tau >= 1, "tau", "tau >= 1", *tau as f64)
            }
            DetectorSpec::ResetQuadratic { t_prime, tau } => {
                require(t_prime.is_finite(), "t_prime", "finite", *t_prime)?;
                require(*tau >= 1, "tau", "tau >= 1", *tau as f64)
            }
            DetectorSpec::GaussianLrt {
                cov0,
                cov1,
                log_threshold,
            } => {
                require(
                    !log_threshold.is_nan(),
                    "log_threshold",
                    "not NaN",
                    *log_threshold,
                )?;
                if cov0.dim() != cov1.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: cov0.dim(),
                        found: cov1.dim(),
                    });
                }
                Ok(())
            }
        }
    }

    /// Number of states `X_1..X_m` the rule reads.
    pub fn observation_len(&self) -> usize {
        match self {
            DetectorSpec::Magnitude { n0, .. } => *n0,
            DetectorSpec::InnovationEnergy { k, .. } => k + 1,
            DetectorSpec::ResetChiSquare { tau, .. } | DetectorSpec::ResetQuadratic { tau, .. } => {
                tau + 1
            }
            DetectorSpec::GaussianLrt { cov0, .. } => cov0.dim(),
        }
    }
}

/// A validated detector with any factorizations precomputed.
#[derive(Debug, Clone)]
pub struct Detector {
    spec: DetectorSpec,
    lrt: Option<LrtFactors>,
}

#[derive(Debug, Clone)]
struct LrtFactors {
    chol0: Cholesky,
    chol1: Cholesky,
    log_det_ratio: f64,
}

impl Detector {
    pub fn new(spec: DetectorSpec) -> Result<Self> {
        spec.validate()?;
        let lrt = match &spec {
            DetectorSpec::GaussianLrt { cov0, cov1, .. } => {
                let chol0 = cov0.cholesky()?;
                let chol1 = cov1.cholesky()?;
                let log_det_ratio = chol0.log_det() - chol1.log_det();
                Some(LrtFactors {
                    chol0,
                    chol1,
                    log_det_ratio,
                })
            }
            _ => None,
        };
        Ok(Self { spec, lrt })
    }

    pub fn spec(&self) -> &DetectorSpec {
        &self.spec
    }

    /// Applies the rule to the states `X_1..X_n` of a trajectory.
    pub fn decide(&self, traj: &Trajectory, params: &SystemParams) -> Result<Decision> {
        self.decide_states(&traj.states, params)
    }

    /// Applies the rule to `states = (X_1, ..., X_n)`.
    pub fn decide_states(&self, states: &[f64], params: &SystemParams) -> Result<Decision> {
        let need = self.spec.observation_len();
        if states.len() < need {
            return Err(Error::DimensionMismatch {
                expected: need,
                found: states.len(),
            });
        }
        let a = params.gain_a;
        let sigma_z = params.noise.std_dev();
        match self.spec {
            DetectorSpec::Magnitude { m, n0 } => Ok(magnitude_decide(states[n0 - 1], m)),
            DetectorSpec::InnovationEnergy { k, t } => {
                innovation_energy_decide(&states[..=k], a, sigma_z, t)
            }
            DetectorSpec::ResetChiSquare { t, tau } => Ok(reset_chi_square_decide(
                states[tau - 1],
                states[tau],
                a,
                sigma_z,
                t,
            )),
            DetectorSpec::ResetQuadratic { t_prime, tau } => {
                let statistic = reset_quadratic_statistic(states, a, sigma_z, tau)?;
                Ok(Decision {
                    reject_null: statistic > t_prime,
                    statistic,
                    threshold: t_prime,
                })
            }
            DetectorSpec::GaussianLrt { log_threshold, .. } => {
                let f = self.lrt.as_ref().expect("factors built in Detector::new");
                let x = &states[..need];
                let statistic =
                    f.chol0.inv_quad_form(x)? - f.chol1.inv_quad_form(x)? + f.log_det_ratio;
                Ok(Decision {
                    reject_null: statistic > log_threshold,
                    statistic,
                    threshold: log_threshold,
                })
            }
        }
    }
}

/// `|x| <= m` declares "controlled": an uncontrolled unstable state should be large.
pub fn magnitude_decide(x_n0: f64, m: f64) -> Decision {
    let statistic = libm::fabs(x_n0);
    Decision {
        reject_null: statistic <= m,
        statistic,
        threshold: m,
    }
}

/// Designed magnitude test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MagnitudeDesign {
    pub m: f64,
    pub n0: usize,
}

/// `m = (2c / delta)^{1/gamma}` and the smallest `n0` with
/// `n0 >= log(m sqrt(a^2 - 1) / (sigma_Z Q^{-1}((1 - delta/2) / 2))) / log|a|`.
pub fn magnitude_design(
    c: f64,
    gamma: f64,
    delta: f64,
    a: f64,
    sigma_z: f64,
) -> Result<MagnitudeDesign> {
    if !(libm::fabs(a) > 1.0) || !a.is_finite() {
        return Err(Error::NotUnstable { a });
    }
    positive("c", c)?;
    positive("gamma", gamma)?;
    probability_open("delta", delta)?;
    positive("sigma_z", sigma_z)?;
    let m = libm::pow(2.0 * c / delta, 1.0 / gamma);
    let q = q_inverse((1.0 - delta / 2.0) / 2.0);
    let ratio = m * libm::sqrt(a * a - 1.0) / (sigma_z * q);
    let raw = libm::log(ratio) / libm::log(libm::fabs(a));
    let n0 = if raw <= 1.0 {
        1
    } else {
        libm::ceil(raw) as usize
    };
    Ok(MagnitudeDesign { m, n0 })
}

/// Analytic false-alarm rate of the magnitude test from `X_0 ~ N(0, sigma_0^2)`:
/// `P(|X_{n0}| <= m)` with `Var X_{n0} = s (a^{2 n0} - 1) / (a^2 - 1) + a^{2 n0} sigma_0^2`.
pub fn magnitude_false_alarm(m: f64, n0: usize, a: f64, sigma_z: f64, init_variance: f64) -> f64 {
    let a2n = libm::pow(a * a, n0 as f64);
    let var = sigma_z * sigma_z * (a2n - 1.0) / (a * a - 1.0) + a2n * init_variance;
    1.0 - 2.0 * q_function(m / libm::sqrt(var))
}

/// Mean of `(x_n - a x_{n-1})^2` over consecutive pairs; reject iff it is
/// `>= sigma_Z^2 + t`.
pub fn innovation_energy_decide(states: &[f64], a: f64, sigma_z: f64, t: f64) -> Result<Decision> {
    if states.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: states.len(),
        });
    }
    let k = states.len() - 1;
    let sum: f64 = states
        .windows(2)
        .map(|w| {
            let y = w[1] - a * w[0];
            y * y
        })
        .sum();
    let statistic = sum / k as f64;
    let threshold = sigma_z * sigma_z + t;
    Ok(Decision {
        reject_null: statistic >= threshold,
        statistic,
        threshold,
    })
}

/// Designed innovation-energy test.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyDesign {
    /// Unrounded sample-count bound.
    pub k0_real: f64,
    pub k0: usize,
    pub t: f64,
}

/// Sample count and threshold guaranteeing `alpha, beta <= delta/2` by Chebyshev:
///
/// `K0 = (sqrt(v1 / (delta/2)) + sqrt(v0 / (delta/2)))^2 / e_u^2` with
/// `v0 = m4 - sigma^4`, `v1 = v0 + 4 e_u sigma^2`, and `t = sqrt(v0 / (K delta/2))`.
pub fn innovation_energy_design(delta: f64, noise: &NoiseModel, e_u: f64) -> Result<EnergyDesign> {
    probability_open("delta", delta)?;
    noise.validate()?;
    positive("e_u", e_u)?;
    let s2 = noise.variance();
    positive("sigma_z^2", s2)?;
    let v0 = noise.fourth_moment() - s2 * s2;
    let v1 = v0 + 4.0 * e_u * s2;
    let half = delta / 2.0;
    let root = libm::sqrt(v1 / half) + libm::sqrt(v0 / half);
    let k0_real = root * root / (e_u * e_u);
    let k0 = (libm::ceil(k0_real) as usize).max(1);
    let t = libm::sqrt(v0 / (k0 as f64 * half));
    Ok(EnergyDesign { k0_real, k0, t })
}

/// `(x_{tau+1} - a x_tau)^2 / sigma_Z^2 > t^2`.
pub fn reset_chi_square_decide(x_tau: f64, x_tau1: f64, a: f64, sigma_z: f64, t: f64) -> Decision {
    let r = (x_tau1 - a * x_tau) / sigma_z;
    let statistic = r * r;
    let threshold = t * t;
    Decision {
        reject_null: statistic > threshold,
        statistic,
        threshold,
    }
}

/// Analytic `(alpha, beta) = (2Q(t), 1 - 2Q(t / sqrt((1 + a^2) / (1 - a^2))))`.
pub fn reset_chi_square_rates(a: f64, t: f64) -> Result<(f64, f64)> {
    crate::error::stable_gain(a)?;
    positive("t", t)?;
    let r = libm::sqrt((1.0 + a * a) / (1.0 - a * a));
    Ok((2.0 * q_function(t), 1.0 - 2.0 * q_function(t / r)))
}

/// Chi-square threshold design.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChiSquareDesign {
    pub t: f64,
    pub feasible: bool,
    /// `Q^{-1}(delta/4)`.
    pub lower: f64,
    /// `sqrt((1 + a^2)/(1 - a^2)) Q^{-1}((2 - delta)/4)`.
    pub upper: f64,
}

/// Thresholds with `alpha <= delta/2` and `beta <= delta/2` form the interval
/// `[lower, upper]`; `t` is its midpoint when non-empty. When the interval is
/// empty `feasible` is false and `t` is `lower` (the `alpha`-safe end).
pub fn reset_chi_square_design(delta: f64, a: f64) -> Result<ChiSquareDesign> {
    probability_open("delta", delta)?;
    crate::error::stable_gain(a)?;
    let lower = q_inverse(delta / 4.0);
    let upper = libm::sqrt((1.0 + a * a) / (1.0 - a * a)) * q_inverse((2.0 - delta) / 4.0);
    let feasible = lower <= upper;
    let t = if feasible {
        0.5 * (lower + upper)
    } else {
        lower
    };
    Ok(ChiSquareDesign {
        t,
        feasible,
        lower,
        upper,
    })
}

/// `T = ((x_{tau+1} - a x_tau)^2 - (1 - a^2) x_{tau+1}^2) / sigma_Z^2`, with
/// `states = (X_1, ..., X_n)` and 1-based `tau`.
pub fn reset_quadratic_statistic(states: &[f64], a: f64, sigma_z: f64, tau: usize) -> Result<f64> {
    if tau == 0 || tau >= states.len() {
        return Err(Error::IndexOutOfRange {
            index: tau,
            len: states.len(),
        });
    }
    let (x0, x1) = (states[tau - 1], states[tau]);
    let r = x1 - a * x0;
    Ok((r * r - (1.0 - a * a) * x1 * x1) / (sigma_z * sigma_z))
}

/// One-shot Gaussian LRT; see [`Detector`] to reuse the factorizations.
pub fn gaussian_lrt_decide(states: &[f64], spec: &DetectorSpec) -> Result<Decision> {
    let DetectorSpec::GaussianLrt { cov0, .. } = spec else {
        return Err(Error::InvalidParameter {
            name: "detector",
            rule: "GaussianLRT spec",
            value: f64::NAN,
        });
    };
    if states.len() != cov0.dim() {
        return Err(Error::DimensionMismatch {
            expected: cov0.dim(),
            found: states.len(),
        });
    }
    let det = Detector::new(spec.clone())?;
    let f = det.lrt.as_ref().expect("factors built in Detector::new");
    let statistic =
        f.chol0.inv_quad_form(states)? - f.chol1.inv_quad_form(states)? + f.log_det_ratio;
    let DetectorSpec::GaussianLrt { log_threshold, .. } = *spec else {
        unreachable!()
    };
    Ok(Decision {
        reject_null: statistic > log_threshold,
        statistic,
        threshold: log_threshold,
    })
}

/// Innovations `x_n - a x_{n-1}` of a state sequence.
pub fn innovations(states: &[f64], a: f64) -> Vec<f64> {
    states.windows(2).map(|w| w[1] - a * w[0]).collect()
}
