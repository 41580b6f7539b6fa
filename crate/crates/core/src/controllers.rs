//! Control laws available to the hidden controller.
//!
//! Every law is causal: `U_n` depends on `X_{n-1}` only (plus, for the reset
//! law, a fresh standard normal draw supplied by the caller's stream).

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{require, stable_gain, Error, Result};
use crate::system::SystemParams;

/// Tagged union of the supported control laws.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", deny_unknown_fields))]
pub enum ControllerSpec {
    #[default]
    None,
    /// Sign feedback `U_n = (a/2) C_{n-1} sgn(X_{n-1})` with
    /// `C_n = (a/2) C_{n-1} + B`.
    OneBit { c1: f64, bound_b: f64 },
    /// Reset to zero: `U_n = a X_{n-1}` whenever `|X_{n-1}| >= d`.
    Threshold { d: f64 },
    /// `U_n = (a - b) X_{n-1}`, turning the loop into an AR(1) with gain `b`.
    GainChange { b: f64 },
    /// A single reset to the stationary law, acting on step `tau + 1`.
    ResetOnce { tau: usize },
}

/// Bounds on the time-averaged one-bit control energy.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnergyBounds {
    pub lower: f64,
    pub upper: f64,
    pub steady_state: f64,
}

impl ControllerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ControllerSpec::None => "None",
            ControllerSpec::OneBit { .. } => "OneBit",
            ControllerSpec::Threshold { .. } => "Threshold",
            ControllerSpec::GainChange { .. } => "GainChange",
            ControllerSpec::ResetOnce { .. } => "ResetOnce",
        }
    }

    /// Checks the constraints that do not depend on the plant.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ControllerSpec::None => Ok(()),
            ControllerSpec::OneBit { c1, bound_b } => {
                require(c1 > 0.0 && c1.is_finite(), "c1", "c1 > 0", c1)?;
                require(
                    bound_b > 0.0 && bound_b.is_finite(),
                    "bound_b",
                    "B > 0",
                    bound_b,
                )
            }
            ControllerSpec::Threshold { d } => require(d > 0.0 && d.is_finite(), "d", "D > 0", d),
            ControllerSpec::GainChange { b } => {
                require(b.is_finite() && libm::fabs(b) < 1.0, "b", "|b| < 1", b)?;
                require(b != 0.0, "b", "b != 0", b)
            }
            ControllerSpec::ResetOnce { tau } => require(tau >= 1, "tau", "tau >= 1", tau as f64),
        }
    }

    /// Checks the law against the plant it will drive.
    ///
    /// - `OneBit`: `0 < a < 2` and `c1 >= B / (1 - a/2)`.
    /// - `GainChange`: for `|a| < 1`, `0 < |a| < |b| < 1` with matching signs;
    ///   for `|a| > 1` the law is used as a stabilizer and only `|b| < 1` is
    ///   required.
    /// - `ResetOnce`: `|a| < 1` and stationary initialization.
    pub fn check_admissible(&self, params: &SystemParams) -> Result<()> {
        self.validate()?;
        let a = params.gain_a;
        match *self {
            ControllerSpec::None | ControllerSpec::Threshold { .. } => Ok(()),
            ControllerSpec::OneBit { c1, bound_b } => {
                if !(a > 0.0 && a < 2.0) {
                    return Err(Error::Inadmissible {
                        controller: "OneBit",
                        rule: "0 < a < 2",
                    });
                }
                if !meets_fixed_point(c1, a, bound_b) {
                    return Err(Error::Inadmissible {
                        controller: "OneBit",
                        rule: "c1 >= B / (1 - a/2)",
                    });
                }
                Ok(())
            }
            ControllerSpec::GainChange { b } => {
                if libm::fabs(a) > 1.0 {
                    return Ok(());
                }
                let ordered = 0.0 < libm::fabs(a) && libm::fabs(a) < libm::fabs(b);
                if !ordered {
                    return Err(Error::Inadmissible {
                        controller: "GainChange",
                        rule: "0 < |a| < |b| < 1",
                    });
                }
                if (a > 0.0) != (b > 0.0) {
                    return Err(Error::Inadmissible {
                        controller: "GainChange",
                        rule: "sgn(a) = sgn(b)",
                    });
                }
                Ok(())
            }
            ControllerSpec::ResetOnce { .. } => {
                if libm::fabs(a) >= 1.0 {
                    return Err(Error::Inadmissible {
                        controller: "ResetOnce",
                        rule: "|a| < 1",
                    });
                }
                if !params.stationary_init {
                    return Err(Error::Inadmissible {
                        controller: "ResetOnce",
                        rule: "stationary initialization",
                    });
                }
                Ok(())
            }
        }
    }

    /// Non-fatal remarks about a configuration.
    pub fn warnings(&self, params: &SystemParams) -> Vec<String> {
        let mut out = Vec::new();
        if let ControllerSpec::GainChange { b } = *self {
            let a = params.gain_a;
            if a < 0.0 && b < 0.0 {
                out.push(String::from(
                    "negative gains: the observation-window condition n < 2b/(b-a) is vacuous",
                ));
            }
            if libm::fabs(a) > 1.0 {
                out.push(String::from(
                    "|a| > 1: GainChange acts as a stabilizer, covertness bounds do not apply",
                ));
            }
        }
        if let ControllerSpec::OneBit { .. } = self {
            if params.noise.bound().is_none() {
                out.push(String::from(
                    "one-bit controller on unbounded noise: state boundedness is not guaranteed",
                ));
            }
        }
        out
    }

    /// Control `U_n` for step `n >= 1` given `X_{n-1}`.
    ///
    /// `reset_draw` is consulted only by `ResetOnce` on step `tau + 1`.
    pub fn control(
        &self,
        params: &SystemParams,
        n: usize,
        x_prev: f64,
        reset_draw: impl FnOnce() -> f64,
    ) -> f64 {
        let a = params.gain_a;
        match *self {
            ControllerSpec::None => 0.0,
            // C_{n-1} is undefined at n = 1; the first step uses C_1.
            ControllerSpec::OneBit { c1, bound_b } => {
                let c = one_bit_gain_unchecked(n.max(2) - 1, c1, bound_b, a);
                0.5 * a * c * sgn(x_prev)
            }
            ControllerSpec::Threshold { d } => threshold_control(x_prev, d, a),
            ControllerSpec::GainChange { b } => gain_change_control(x_prev, a, b),
            ControllerSpec::ResetOnce { tau } => {
                if n == tau + 1 {
                    let x_tilde = reset_draw() * params.noise.std_dev() / libm::sqrt(1.0 - a * a);
                    a * x_prev - a * x_tilde
                } else {
                    0.0
                }
            }
        }
    }
}

/// `sgn` with `sgn(0) = +1`.
#[inline]
pub fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Fixed point `B / (1 - a/2)` of the one-bit gain recursion.
pub fn one_bit_fixed_point(a: f64, bound_b: f64) -> f64 {
    bound_b / (1.0 - 0.5 * a)
}

fn one_bit_gain_unchecked(n: usize, c1: f64, bound_b: f64, a: f64) -> f64 {
    let fixed = one_bit_fixed_point(a, bound_b);
    fixed + libm::pow(0.5 * a, (n - 1) as f64) * (c1 - fixed)
}

fn check_one_bit(c1: f64, bound_b: f64, a: f64) -> Result<()> {
    require(a != 2.0 && a.is_finite(), "a", "a != 2", a)?;
    require(bound_b > 0.0, "bound_b", "B > 0", bound_b)?;
    require(
        meets_fixed_point(c1, a, bound_b),
        "c1",
        "c1 >= B / (1 - a/2)",
        c1,
    )
}

/// `c1 >= B / (1 - a/2)`, allowing for a decimal rendering of the fixed point.
fn meets_fixed_point(c1: f64, a: f64, bound_b: f64) -> bool {
    let fixed = one_bit_fixed_point(a, bound_b);
    c1 >= fixed - 1e-12 * libm::fabs(fixed)
}

/// `C_n = B/(1 - a/2) + (a/2)^{n-1} (C_1 - B/(1 - a/2))`.
pub fn one_bit_gain(n: usize, c1: f64, bound_b: f64, a: f64) -> Result<f64> {
    require(n >= 1, "n", "n >= 1", n as f64)?;
    check_one_bit(c1, bound_b, a)?;
    if n == 1 {
        return Ok(c1);
    }
    Ok(one_bit_gain_unchecked(n, c1, bound_b, a))
}

/// `U_n = (a/2) C_{n-1} sgn(x_prev)` for `n >= 2`.
pub fn one_bit_control(x_prev: f64, n: usize, c1: f64, bound_b: f64, a: f64) -> Result<f64> {
    require(n >= 2, "n", "n >= 2", n as f64)?;
    let c = one_bit_gain(n - 1, c1, bound_b, a)?;
    Ok(0.5 * a * c * sgn(x_prev))
}

/// Lower `(aB/(2-a))^2`, upper `((a/2) C_1)^2`, steady state equal to lower.
pub fn one_bit_energy_bounds(c1: f64, bound_b: f64, a: f64) -> Result<EnergyBounds> {
    check_one_bit(c1, bound_b, a)?;
    let low = a * bound_b / (2.0 - a);
    let lower = low * low;
    let up = 0.5 * a * c1;
    let upper = up * up;
    Ok(EnergyBounds {
        lower,
        upper,
        steady_state: lower,
    })
}

/// `a x_prev` when `|x_prev| >= d`, else 0.
pub fn threshold_control(x_prev: f64, d: f64, a: f64) -> f64 {
    if libm::fabs(x_prev) >= d {
        a * x_prev
    } else {
        0.0
    }
}

/// `(a - b) x_prev`.
pub fn gain_change_control(x_prev: f64, a: f64, b: f64) -> f64 {
    (a - b) * x_prev
}

/// `a x_tau - a x~` with `x~ = draw * sigma_z / sqrt(1 - a^2)`.
pub fn reset_once_control(x_tau: f64, a: f64, sigma_z: f64, rng_draw: f64) -> Result<f64> {
    stable_gain(a)?;
    let x_tilde = rng_draw * sigma_z / libm::sqrt(1.0 - a * a);
    Ok(a * x_tau - a * x_tilde)
}
