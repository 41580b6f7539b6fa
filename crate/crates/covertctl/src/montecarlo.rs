//! Seeded Monte Carlo estimation of false-alarm and miss rates.
//!
//! Trial `i` under hypothesis `h` draws from the stream keyed by
//! `(master_seed, stream_id(h, i))`, so results do not depend on how trials
//! are scheduled across threads. Counts are integers, which makes the
//! reduction exact and order-independent.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use covertctl_core::analysis::{BoundDirection, BoundReport};
use covertctl_core::rng::{mix_seed, stream_id, Hypothesis};
use covertctl_core::{
    simulate_stream, trajectory_covariance, ControllerSpec, Detector, DetectorSpec,
    Error as CoreError, SampleStream, SystemParams,
};

use crate::error::{AppError, AppResult};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Minimum number of trials per hypothesis for an experiment.
pub const MIN_TRIALS: u64 = 100;

/// Trials handed to one rayon task.
const CHUNK: u64 = 4_096;

/// Detector as written in a config: an explicit spec, or a Gaussian LRT whose
/// covariances are derived from the configured model.
#[derive(Debug, Clone, PartialEq)]
pub enum DetectorConfig {
    Spec(DetectorSpec),
    /// `{"kind": "ModelLRT", "log_threshold": 0.0}`: H0 covariance of the
    /// uncontrolled plant against H1 covariance under the configured controller.
    ModelLrt {
        log_threshold: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelLrtRepr {
    kind: String,
    #[serde(default)]
    log_threshold: f64,
}

impl Serialize for DetectorConfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DetectorConfig::Spec(spec) => spec.serialize(s),
            DetectorConfig::ModelLrt { log_threshold } => ModelLrtRepr {
                kind: "ModelLRT".into(),
                log_threshold: *log_threshold,
            }
            .serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for DetectorConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let value = Value::deserialize(d)?;
        if value.get("kind").and_then(Value::as_str) == Some("ModelLRT") {
            let repr: ModelLrtRepr = serde_json::from_value(value).map_err(D::Error::custom)?;
            Ok(DetectorConfig::ModelLrt {
                log_threshold: repr.log_threshold,
            })
        } else {
            let spec: DetectorSpec = serde_json::from_value(value).map_err(D::Error::custom)?;
            spec.validate().map_err(D::Error::custom)?;
            Ok(DetectorConfig::Spec(spec))
        }
    }
}

fn default_trials() -> u64 {
    10_000
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    #[serde(default)]
    pub controller: ControllerSpec,
    /// Required for experiments and detection; unused by plain simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorConfig>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub horizon_n: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Uniform bound `c` on `E|X_n|^gamma` for magnitude-test design.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_bound_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Bound the error sum is checked against, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundReport>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> AppResult<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| AppError::config(e.to_string()))?;
        cfg.validate_model()?;
        Ok(cfg)
    }

    /// Checks that do not need a detector.
    pub fn validate_model(&self) -> AppResult<()> {
        if self.horizon_n == 0 {
            return Err(AppError::config("horizon_n must be >= 1"));
        }
        self.controller.check_admissible(&self.system)?;
        if let Some(c) = self.moment_bound_c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(AppError::config("moment_bound_c must be finite and > 0"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(AppError::config("gamma must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Checks the full experiment invariants and builds the detector.
    pub fn prepare(&self) -> AppResult<Detector> {
        self.validate_model()?;
        if self.trials < MIN_TRIALS {
            return Err(AppError::config(format!(
                "trials = {} violates trials >= {MIN_TRIALS}",
                self.trials
            )));
        }
        let detector = self.build_detector()?;
        let need = detector.spec().observation_len();
        if self.horizon_n < need {
            return Err(AppError::config(format!(
                "horizon_n = {} but the {} detector reads {need} states",
                self.horizon_n,
                detector.spec().name()
            )));
        }
        Ok(detector)
    }

    /// Resolves the configured detector into a compiled [`Detector`].
    pub fn build_detector(&self) -> AppResult<Detector> {
        let spec = match &self.detector {
            None => return Err(AppError::config("no detector configured")),
            Some(DetectorConfig::Spec(spec)) => spec.clone(),
            Some(DetectorConfig::ModelLrt { log_threshold }) => {
                if !self.system.noise.is_gaussian() {
                    return Err(CoreError::NotGaussian {
                        controller: self.controller.name(),
                    }
                    .into());
                }
                let n = self.horizon_n;
                DetectorSpec::GaussianLrt {
                    cov0: trajectory_covariance(&self.system, &ControllerSpec::None, n)?,
                    cov1: trajectory_covariance(&self.system, &self.controller, n)?,
                    log_threshold: *log_threshold,
                }
            }
        };
        Ok(Detector::new(spec)?)
    }
}

/// Empirical error rates with 95% Wilson half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub alpha_ci: f64,
    pub beta_ci: f64,
    pub trials: u64,
}

impl ErrorRates {
    pub fn from_counts(false_alarms: u64, misses: u64, trials: u64) -> Self {
        let n = trials as f64;
        let alpha_hat = false_alarms as f64 / n;
        let beta_hat = misses as f64 / n;
        Self {
            alpha_hat,
            beta_hat,
            alpha_ci: wilson_half_width(alpha_hat, trials),
            beta_ci: wilson_half_width(beta_hat, trials),
            trials,
        }
    }

    pub fn alpha_se(&self) -> f64 {
        binomial_se(self.alpha_hat, self.trials)
    }

    pub fn beta_se(&self) -> f64 {
        binomial_se(self.beta_hat, self.trials)
    }

    pub fn sum(&self) -> f64 {
        self.alpha_hat + self.beta_hat
    }

    /// Standard error of `alpha_hat + beta_hat` (independent hypotheses).
    pub fn sum_se(&self) -> f64 {
        self.alpha_se().hypot(self.beta_se())
    }
}

pub fn binomial_se(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Half-width of the 95% Wilson score interval.
pub fn wilson_half_width(p: f64, trials: u64) -> f64 {
    let n = trials as f64;
    let z2 = Z95 * Z95;
    Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
}

/// Number of worker threads: `COVERTCTL_THREADS` if set and positive,
/// otherwise the hardware count.
pub fn thread_count() -> usize {
    std::env::var("COVERTCTL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `trials` uncontrolled and `trials` controlled simulations and applies
/// the detector to each, using [`thread_count`] workers.
pub fn estimate_error_rates(cfg: &ExperimentConfig) -> AppResult<ErrorRates> {
    estimate_error_rates_with_threads(cfg, thread_count())
}

pub fn estimate_error_rates_with_threads(
    cfg: &ExperimentConfig,
    threads: usize,
) -> AppResult<ErrorRates> {
    let detector = cfg.prepare()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| AppError::config(format!("thread pool: {e}")))?;
    let false_alarms =
        pool.install(|| count_rejections(cfg, &detector, Hypothesis::Null, &ControllerSpec::None))?;
    let rejections = pool
        .install(|| count_rejections(cfg, &detector, Hypothesis::Alternative, &cfg.controller))?;
    Ok(ErrorRates::from_counts(
        false_alarms,
        cfg.trials - rejections,
        cfg.trials,
    ))
}

fn count_rejections(
    cfg: &ExperimentConfig,
    detector: &Detector,
    hypothesis: Hypothesis,
    controller: &ControllerSpec,
) -> AppResult<u64> {
    let chunks = cfg.trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(cfg.trials);
            let mut hits = 0u64;
            for trial in start..end {
                let mut stream = SampleStream::keyed(cfg.master_seed, stream_id(hypothesis, trial));
                let traj = simulate_stream(&cfg.system, controller, cfg.horizon_n, &mut stream)?;
                if detector.decide(&traj, &cfg.system)?.reject_null {
                    hits += 1;
                }
            }
            Ok::<u64, CoreError>(hits)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
        .map_err(AppError::from)
}

/// Writes `value` at a dotted path (`controller.b`, `detector.t`, `trials`)
/// of the config's JSON form. The path must already exist.
pub fn set_parameter(
    cfg: &ExperimentConfig,
    path: &str,
    value: f64,
) -> AppResult<ExperimentConfig> {
    let mut json = serde_json::to_value(cfg).map_err(|e| AppError::config(e.to_string()))?;
    let mut slot = &mut json;
    for key in path.split('.') {
        slot = slot
            .get_mut(key)
            .ok_or_else(|| AppError::config(format!("unknown parameter '{path}'")))?;
    }
    let replacement = match slot {
        Value::Number(n) if n.is_u64() || n.is_i64() => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(AppError::config(format!(
                    "parameter '{path}' is an integer, got {value}"
                )));
            }
            Value::from(value as u64)
        }
        Value::Number(_) => serde_json::Number::from_f64(value)
            .map(Value::Number)
            .ok_or_else(|| AppError::config(format!("non-finite value {value}")))?,
        _ => {
            return Err(AppError::config(format!(
                "parameter '{path}' is not numeric"
            )))
        }
    };
    *slot = replacement;
    let out: ExperimentConfig =
        serde_json::from_value(json).map_err(|e| AppError::config(e.to_string()))?;
    out.validate_model()?;
    Ok(out)
}

/// One independent estimate per value; the seed for value `i` is
/// `mix_seed(master_seed, i)`.
pub fn sweep(
    template: &ExperimentConfig,
    parameter: &str,
    values: &[f64],
) -> AppResult<Vec<(f64, ErrorRates)>> {
    // fail on an unknown name even when there is nothing to run
    set_parameter(template, parameter, current_value(template, parameter)?)?;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut cfg = set_parameter(template, parameter, v)?;
            cfg.master_seed = mix_seed(template.master_seed, i as u64);
            Ok((v, estimate_error_rates(&cfg)?))
        })
        .collect()
}

fn current_value(cfg: &ExperimentConfig, path: &str) -> AppResult<f64> {
    let json = serde_json::to_value(cfg).map_err(|e| AppError::config(e.to_string()))?;
    let mut slot = &json;
    for key in path.split('.') {
        slot = slot
            .get(key)
            .ok_or_else(|| AppError::config(format!("unknown parameter '{path}'")))?;
    }
    slot.as_f64()
        .ok_or_else(|| AppError::config(format!("parameter '{path}' is not numeric")))
}

/// Outcome of checking an error sum against a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Consistent,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Consistent => "Consistent",
            Verdict::Violated => "Violated",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

/// Consistent when `alpha + beta` is on the bound's side; Violated when it is
/// past the bound by more than 3 standard errors; Inconclusive in between.
pub fn verify_bound(rates: &ErrorRates, bound: &BoundReport) -> Verdict {
    let sum = rates.sum();
    let slack = 3.0 * rates.sum_se();
    let gap = match bound.direction {
        BoundDirection::Lower => bound.value - sum,
        BoundDirection::Upper => sum - bound.value,
    };
    if gap <= 0.0 {
        Verdict::Consistent
    } else if gap > slack {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

/// Sample estimate of `max_n E|X_n|^gamma` along a controlled loop.
pub fn moment_estimate(
    system: &SystemParams,
    controller: &ControllerSpec,
    horizon_n: usize,
    gamma: f64,
    trials: u64,
    seed: u64,
) -> AppResult<f64> {
    let sums = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut s = SampleStream::keyed(seed, stream_id(Hypothesis::Alternative, t));
            let traj = simulate_stream(system, controller, horizon_n, &mut s)?;
            let mut row = Vec::with_capacity(horizon_n + 1);
            row.push(traj.initial_state.abs().powf(gamma));
            row.extend(traj.states.iter().map(|x| x.abs().powf(gamma)));
            Ok::<Vec<f64>, CoreError>(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut acc = vec![0.0; horizon_n + 1];
    for row in &sums {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    Ok(acc.iter().map(|v| v / trials as f64).fold(0.0, f64::max))
}

/// Flat record of a run for the results files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub param: String,
    pub value: Option<f64>,
    pub rates: ErrorRates,
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl ResultRow {
    pub fn new(
        param: &str,
        value: Option<f64>,
        rates: ErrorRates,
        bound: Option<&BoundReport>,
    ) -> Self {
        Self {
            param: param.to_string(),
            value,
            rates,
            verdict: bound.map(|b| verify_bound(&rates, b)),
            extra: BTreeMap::new(),
        }
    }
}
