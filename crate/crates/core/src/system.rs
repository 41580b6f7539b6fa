//! The AR(1) plant and trajectory simulation.

use alloc::vec::Vec;

use crate::controllers::ControllerSpec;
use crate::error::{require, stable_gain, Error, Result};
use crate::noise::NoiseModel;
use crate::rng::SampleStream;

/// States beyond this magnitude abort an unstable simulation.
pub const OVERFLOW_LIMIT: f64 = 1e15;

/// Default cap on the horizon when `|a| > 1`.
pub const DEFAULT_MAX_HORIZON: usize = 200;

/// One step of the plant: `a x + z - u`.
#[inline]
pub fn step(x: f64, params: &SystemParams, z: f64, u: f64) -> f64 {
    params.gain_a * x + z - u
}

/// Plant parameters: gain, noise law and the variance of `X_0 ~ N(0, sigma_0^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawSystem", into = "RawSystem"))]
pub struct SystemParams {
    pub gain_a: f64,
    pub noise: NoiseModel,
    init_variance: f64,
    pub stationary_init: bool,
    /// Horizon cap applied when `|a| > 1`.
    pub max_horizon: usize,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    gain_a: f64,
    noise: NoiseModel,
    #[serde(default)]
    init_variance: Option<f64>,
    #[serde(default)]
    stationary_init: bool,
    #[serde(default = "default_horizon")]
    max_horizon: usize,
}

#[cfg(feature = "serde")]
fn default_horizon() -> usize {
    DEFAULT_MAX_HORIZON
}

#[cfg(feature = "serde")]
impl TryFrom<RawSystem> for SystemParams {
    type Error = Error;
    fn try_from(raw: RawSystem) -> Result<Self> {
        let params = if raw.stationary_init {
            SystemParams::stationary(raw.gain_a, raw.noise)?
        } else {
            SystemParams::new(raw.gain_a, raw.noise, raw.init_variance.unwrap_or(0.0))?
        };
        Ok(params.with_max_horizon(raw.max_horizon))
    }
}

#[cfg(feature = "serde")]
impl From<SystemParams> for RawSystem {
    fn from(p: SystemParams) -> Self {
        RawSystem {
            gain_a: p.gain_a,
            noise: p.noise,
            init_variance: Some(p.init_variance),
            stationary_init: p.stationary_init,
            max_horizon: p.max_horizon,
        }
    }
}

impl SystemParams {
    pub fn new(gain_a: f64, noise: NoiseModel, init_variance: f64) -> Result<Self> {
        require(gain_a.is_finite(), "a", "finite", gain_a)?;
        noise.validate()?;
        require(
            init_variance >= 0.0 && init_variance.is_finite(),
            "init_variance",
            "sigma_0^2 >= 0",
            init_variance,
        )?;
        Ok(Self {
            gain_a,
            noise,
            init_variance,
            stationary_init: false,
            max_horizon: DEFAULT_MAX_HORIZON,
        })
    }

    /// `X_0` drawn from the stationary law, `sigma_0^2 = sigma_Z^2 / (1 - a^2)`.
    pub fn stationary(gain_a: f64, noise: NoiseModel) -> Result<Self> {
        stable_gain(gain_a)?;
        noise.validate()?;
        Ok(Self {
            gain_a,
            noise,
            init_variance: noise.variance() / (1.0 - gain_a * gain_a),
            stationary_init: true,
            max_horizon: DEFAULT_MAX_HORIZON,
        })
    }

    pub fn with_max_horizon(mut self, max_horizon: usize) -> Self {
        self.max_horizon = max_horizon;
        self
    }

    /// Same plant with a different gain; a stationary plant stays stationary.
    pub fn with_gain(&self, gain_a: f64) -> Result<Self> {
        let p = if self.stationary_init {
            Self::stationary(gain_a, self.noise)?
        } else {
            Self::new(gain_a, self.noise, self.init_variance)?
        };
        Ok(p.with_max_horizon(self.max_horizon))
    }

    /// `sigma_0^2`.
    pub fn init_variance(&self) -> f64 {
        self.init_variance
    }

    /// `sigma_Z^2`.
    pub fn noise_variance(&self) -> f64 {
        self.noise.variance()
    }

    /// Variance of `X_0` when the plant is driven by `controller`.
    ///
    /// A stationary plant under `GainChange { b }` starts in the stationary law
    /// of the closed loop, so the whole path is a stationary AR(1) with gain `b`.
    pub fn initial_variance_under(&self, controller: &ControllerSpec) -> f64 {
        match *controller {
            ControllerSpec::GainChange { b } if self.stationary_init && libm::fabs(b) < 1.0 => {
                self.noise_variance() / (1.0 - b * b)
            }
            _ => self.init_variance,
        }
    }
}

/// A realized path `X_1..X_n` with its controls.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub states: Vec<f64>,
    pub controls: Vec<f64>,
    pub initial_state: f64,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub stream: u64,
    /// Index `tau` of each state that triggered a reset (acting on `tau + 1`).
    #[cfg_attr(feature = "serde", serde(default))]
    pub crossing_times: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `X_k` for `0 <= k <= n`.
    pub fn state(&self, k: usize) -> Option<f64> {
        if k == 0 {
            Some(self.initial_state)
        } else {
            self.states.get(k - 1).copied()
        }
    }
}

/// Simulates `n` steps on stream 0 of `seed`.
pub fn simulate(
    params: &SystemParams,
    controller: &ControllerSpec,
    n: usize,
    seed: u64,
) -> Result<Trajectory> {
    simulate_stream(params, controller, n, &mut SampleStream::keyed(seed, 0))
}

/// Simulates `n` steps drawing from `stream`.
///
/// Draw order: one standard normal for `X_0`, then per step `k = 1..=n` the
/// reset draw (only on the `ResetOnce` step) followed by one noise draw.
pub fn simulate_stream(
    params: &SystemParams,
    controller: &ControllerSpec,
    n: usize,
    stream: &mut SampleStream,
) -> Result<Trajectory> {
    require(n >= 1, "n", "n >= 1", n as f64)?;
    if params.stationary_init {
        stable_gain(params.gain_a)?;
    }
    controller.check_admissible(params)?;
    if let ControllerSpec::ResetOnce { tau } = *controller {
        require(tau < n, "tau", "tau < n", tau as f64)?;
    }
    if libm::fabs(params.gain_a) > 1.0 && n > params.max_horizon {
        return Err(Error::HorizonExceeded {
            n,
            max: params.max_horizon,
        });
    }

    let sigma0 = libm::sqrt(params.initial_variance_under(controller));
    let x0 = sigma0 * stream.standard_normal();

    let mut states = Vec::with_capacity(n);
    let mut controls = Vec::with_capacity(n);
    let mut crossing_times = Vec::new();
    let mut x = x0;
    for k in 1..=n {
        let u = controller.control(params, k, x, || stream.standard_normal());
        match *controller {
            ControllerSpec::Threshold { d } if libm::fabs(x) >= d => crossing_times.push(k - 1),
            ControllerSpec::ResetOnce { tau } if k == tau + 1 => crossing_times.push(tau),
            _ => {}
        }
        let z = params.noise.sample(stream);
        x = step(x, params, z, u);
        if !(libm::fabs(x) <= OVERFLOW_LIMIT) {
            return Err(Error::Overflow {
                step: k,
                value: libm::fabs(x),
            });
        }
        states.push(x);
        controls.push(u);
    }
    Ok(Trajectory {
        states,
        controls,
        initial_state: x0,
        seed: stream.seed(),
        stream: stream.stream(),
        crossing_times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(s: f64) -> NoiseModel {
        NoiseModel::gaussian(s).unwrap()
    }

    #[test]
    fn step_examples() {
        let p = SystemParams::new(0.5, gaussian(1.0), 0.0).unwrap();
        assert_eq!(step(0.0, &p, 0.0, 0.0), 0.0);
        assert_eq!(step(1.0, &p, 0.25, 0.0), 0.75);
        let p = SystemParams::new(0.9, gaussian(1.0), 0.0).unwrap();
        assert!(step(2.0, &p, -0.3, 1.5).abs() < 1e-15);
    }

    #[test]
    fn memoryless_states_are_noise() {
        let p = SystemParams::new(0.0, gaussian(1.0), 1.0).unwrap();
        let t = simulate(&p, &ControllerSpec::None, 3, 42).unwrap();
        let mut s = SampleStream::keyed(42, 0);
        let x0 = s.standard_normal();
        assert_eq!(t.initial_state, x0);
        for k in 0..3 {
            assert_eq!(t.states[k], p.noise.sample(&mut s));
        }
        assert!(t.controls.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn replay_is_bit_identical() {
        let p = SystemParams::stationary(0.8, gaussian(1.3)).unwrap();
        let c = ControllerSpec::ResetOnce { tau: 4 };
        let a = simulate(&p, &c, 20, 99).unwrap();
        let b = simulate(&p, &c, 20, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.crossing_times, [4]);
        assert_ne!(a, simulate(&p, &c, 20, 100).unwrap());
    }

    #[test]
    fn stationary_requires_stable_gain() {
        assert_eq!(
            SystemParams::stationary(1.0, gaussian(1.0)),
            Err(Error::UnitGain { a: 1.0 })
        );
        assert!(SystemParams::stationary(1.5, gaussian(1.0)).is_err());
        let p = SystemParams::stationary(0.5, gaussian(2.0)).unwrap();
        assert!((p.init_variance() - 4.0 / 0.75).abs() < 1e-15);
    }

    #[test]
    fn unstable_horizon_and_overflow() {
        let p = SystemParams::new(1.5, gaussian(1.0), 1.0).unwrap();
        assert_eq!(
            simulate(&p, &ControllerSpec::None, 201, 1),
            Err(Error::HorizonExceeded { n: 201, max: 200 })
        );
        let p = SystemParams::new(3.0, gaussian(1.0), 1.0).unwrap();
        assert!(matches!(
            simulate(&p, &ControllerSpec::None, 200, 1),
            Err(Error::Overflow { .. })
        ));
        let p = p.with_max_horizon(10);
        assert!(simulate(&p, &ControllerSpec::None, 10, 1).is_ok());
    }

    #[test]
    fn threshold_records_crossings() {
        let p = SystemParams::new(0.95, gaussian(1.0), 4.0).unwrap();
        let t = simulate(&p, &ControllerSpec::Threshold { d: 1.0 }, 200, 3).unwrap();
        assert!(!t.crossing_times.is_empty());
        for &tau in &t.crossing_times {
            let x = t.state(tau).unwrap();
            assert!(x.abs() >= 1.0);
            // reset to zero state: X_{tau+1} = Z_{tau+1}
            assert_eq!(t.controls[tau], 0.95 * x);
        }
    }

    #[test]
    fn reset_beyond_horizon_is_rejected() {
        let p = SystemParams::stationary(0.5, gaussian(1.0)).unwrap();
        assert!(simulate(&p, &ControllerSpec::ResetOnce { tau: 5 }, 5, 0).is_err());
    }
}
