//! Oracle suites: each closed form against an independent dense computation.

use serde::{Deserialize, Serialize};

use covertctl_core::analysis::{
    gain_change_kl, gaussian_kl, reset_kl, stationary_inverse, stationary_logdet, trace_ratio_ss,
};
use covertctl_core::dd::DoubleDouble;
use covertctl_core::linalg::Matrix;
use covertctl_core::{
    reset_covariance, state_covariance, stationary_covariance, NoiseModel, SystemParams,
};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Oracle {
    Covariance,
    Trace,
    Logdet,
    Inverse,
    Kl,
}

impl Oracle {
    pub const ALL: [Oracle; 5] = [
        Oracle::Covariance,
        Oracle::Trace,
        Oracle::Logdet,
        Oracle::Inverse,
        Oracle::Kl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Oracle::Covariance => "covariance",
            Oracle::Trace => "trace",
            Oracle::Logdet => "logdet",
            Oracle::Inverse => "inverse",
            Oracle::Kl => "kl",
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            Oracle::Inverse => 1e-10,
            _ => 1e-9,
        }
    }
}

/// Parameter grid. Missing fields fall back to the default grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    /// Gains for the covariance suite (any `|a| != 1`).
    pub gains: Vec<f64>,
    /// Stable gains for the stationary suites.
    pub stable_gains: Vec<f64>,
    /// Horizons; the covariance and KL suites use those up to 50.
    pub horizons: Vec<usize>,
    /// Initial variances; `null` means the stationary value (stable gains only).
    pub init_variances: Vec<Option<f64>>,
    pub sigma_z: f64,
}

impl Default for Grid {
    fn default() -> Self {
        let mut gains = Vec::new();
        for k in 1..=9 {
            let a = k as f64 / 10.0;
            gains.extend([a, -a]);
        }
        gains.extend([1.2, -1.2, 1.5, -1.5]);
        let mut stable_gains = Vec::new();
        for a in [0.1, 0.3, 0.5, 0.7, 0.9, 0.95] {
            stable_gains.extend([a, -a]);
        }
        Self {
            gains,
            stable_gains,
            horizons: vec![1, 2, 3, 5, 8, 13, 21, 34, 50, 75, 100],
            init_variances: vec![Some(0.0), Some(0.5), None],
            sigma_z: 1.0,
        }
    }
}

impl Grid {
    pub fn from_json(text: &str) -> AppResult<Self> {
        let g: Grid = serde_json::from_str(text).map_err(|e| AppError::config(e.to_string()))?;
        if !(g.sigma_z > 0.0 && g.sigma_z.is_finite()) {
            return Err(AppError::config("grid sigma_z must be finite and > 0"));
        }
        if g.horizons.contains(&0) {
            return Err(AppError::config("grid horizons must be >= 1"));
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub oracle: Oracle,
    pub cases: usize,
    pub max_abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn run(oracle: Oracle, grid: &Grid) -> AppResult<VerifyReport> {
    let (cases, err) = match oracle {
        Oracle::Covariance => covariance_suite(grid)?,
        Oracle::Trace => trace_suite(grid)?,
        Oracle::Logdet => logdet_suite(grid)?,
        Oracle::Inverse => inverse_suite(grid)?,
        Oracle::Kl => kl_suite(grid)?,
    };
    let tolerance = oracle.tolerance();
    Ok(VerifyReport {
        oracle,
        cases,
        max_abs_error: err,
        tolerance,
        passed: err < tolerance,
    })
}

/// `s A A^T + s0 t t^T` with `A_ij = a^{i-j} [i >= j]`, `t_i = a^i`, summed in
/// double-double and rounded once.
pub fn product_covariance(a: f64, s: f64, s0: f64, n: usize) -> Matrix {
    let ad = DoubleDouble::from(a);
    let lower: Vec<Vec<DoubleDouble>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i >= j {
                        ad.powi((i - j) as u32)
                    } else {
                        DoubleDouble::ZERO
                    }
                })
                .collect()
        })
        .collect();
    let tilde: Vec<DoubleDouble> = (1..=n).map(|i| ad.powi(i as u32)).collect();
    let (sd, s0d) = (DoubleDouble::from(s), DoubleDouble::from(s0));
    Matrix::from_fn(n, n, |i, j| {
        let mut acc = DoubleDouble::ZERO;
        for (l, r) in lower[i].iter().zip(&lower[j]) {
            acc = acc + *l * *r;
        }
        (sd * acc + s0d * tilde[i] * tilde[j]).to_f64()
    })
}

fn covariance_suite(grid: &Grid) -> AppResult<(usize, f64)> {
    let noise = NoiseModel::gaussian(grid.sigma_z)?;
    let s = noise.variance();
    let mut cases = 0;
    let mut worst = 0.0f64;
    for &a in &grid.gains {
        for init in &grid.init_variances {
            let params = match init {
                Some(v) => SystemParams::new(a, noise, *v)?,
                None if a.abs() < 1.0 => SystemParams::stationary(a, noise)?,
                None => continue,
            };
            for &n in grid.horizons.iter().filter(|&&n| n <= 50) {
                let closed = state_covariance(&params, n)?;
                let dense = product_covariance(a, s, params.init_variance(), n);
                worst = worst.max(closed.to_matrix().max_abs_diff(&dense));
                cases += 1;
            }
        }
    }
    Ok((cases, worst))
}

fn trace_suite(grid: &Grid) -> AppResult<(usize, f64)> {
    let mut cases = 0;
    let mut worst = 0.0f64;
    for &n in &grid.horizons {
        for &b in &grid.stable_gains {
            let chol = stationary_covariance(b, grid.sigma_z, n)?.cholesky()?;
            for &a in &grid.stable_gains {
                let s0 = stationary_covariance(a, grid.sigma_z, n)?;
                let dense = chol.trace_solve(&s0.to_matrix())?;
                worst = worst.max((dense - trace_ratio_ss(a, b, n)?).abs());
                cases += 1;
            }
        }
    }
    Ok((cases, worst))
}

fn logdet_suite(grid: &Grid) -> AppResult<(usize, f64)> {
    let mut cases = 0;
    let mut worst = 0.0f64;
    for &a in &grid.stable_gains {
        for &n in &grid.horizons {
            let c = stationary_covariance(a, grid.sigma_z, n)?;
            let dense = c.cholesky()?.log_det();
            worst = worst.max((dense - stationary_logdet(a, grid.sigma_z, n)?).abs());
            cases += 1;
            // reset determinant ratio against the dense block factorization
            let expect = -(1.0 - a * a).ln();
            for tau in 1..n {
                let r = reset_covariance(a, grid.sigma_z, n, tau)?;
                let ratio = r.cholesky()?.log_det() - dense;
                worst = worst.max((ratio - expect).abs());
                cases += 1;
            }
        }
    }
    Ok((cases, worst))
}

fn inverse_suite(grid: &Grid) -> AppResult<(usize, f64)> {
    let mut cases = 0;
    let mut worst = 0.0f64;
    for &a in &grid.stable_gains {
        for &n in &grid.horizons {
            let inv = stationary_inverse(a, grid.sigma_z, n)?.to_matrix();
            let cov = stationary_covariance(a, grid.sigma_z, n)?.to_matrix();
            let prod = inv.matmul(&cov)?;
            worst = worst.max(prod.max_abs_diff(&Matrix::identity(n)));
            cases += 1;
        }
    }
    Ok((cases, worst))
}

fn kl_suite(grid: &Grid) -> AppResult<(usize, f64)> {
    let mut cases = 0;
    let mut worst = 0.0f64;
    for &n in grid.horizons.iter().filter(|&&n| n <= 50) {
        let mu = vec![0.0; n];
        for &a in &grid.stable_gains {
            let s0 = stationary_covariance(a, grid.sigma_z, n)?;
            for tau in 1..n {
                let r = reset_covariance(a, grid.sigma_z, n, tau)?;
                let dense = gaussian_kl(&mu, &s0, &mu, &r)?;
                worst = worst.max((dense - reset_kl(a)?).abs());
                cases += 1;
            }
            for &b in &grid.stable_gains {
                let s1 = stationary_covariance(b, grid.sigma_z, n)?;
                let dense = gaussian_kl(&mu, &s0, &mu, &s1)?;
                worst = worst.max((dense - gain_change_kl(a, b, n)?).abs());
                cases += 1;
            }
        }
    }
    Ok((cases, worst))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Grid {
        Grid {
            gains: vec![0.5, -1.5],
            stable_gains: vec![-0.6, 0.3],
            horizons: vec![1, 4, 7],
            init_variances: vec![Some(0.2), None],
            sigma_z: 1.3,
        }
    }

    #[test]
    fn every_suite_passes_on_a_small_grid() {
        for o in Oracle::ALL {
            let r = run(o, &small()).unwrap();
            assert!(r.passed, "{}: {}", o.name(), r.max_abs_error);
            assert!(r.cases > 0);
        }
    }

    #[test]
    fn product_oracle_spot_values() {
        // a = 0: s I + 0
        let m = product_covariance(0.0, 2.0, 5.0, 3);
        assert_eq!(m.as_slice(), &[2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0]);
        // n = 1: s + s0 a^2
        let m = product_covariance(1.5, 1.0, 0.2, 1);
        assert!((m.get(0, 0) - 1.45).abs() < 1e-15);
    }

    #[test]
    fn grid_json_defaults_and_rejects_unknown() {
        let g = Grid::from_json(r#"{"horizons":[2,3]}"#).unwrap();
        assert_eq!(g.horizons, vec![2, 3]);
        assert_eq!(g.gains, Grid::default().gains);
        assert!(Grid::from_json(r#"{"bogus":1}"#).is_err());
        assert!(Grid::from_json(r#"{"horizons":[0]}"#).is_err());
    }
}
