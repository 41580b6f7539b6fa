//! Plant noise distributions.

use crate::error::{positive, Result};
use crate::quad::composite_simpson;
use crate::rng::SampleStream;
use crate::special::{normal_cdf, normal_pdf, normal_quantile, powi};

/// Distribution of the i.i.d. plant noise `Z_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", deny_unknown_fields))]
pub enum NoiseModel {
    /// `N(0, sigma_z^2)`.
    Gaussian { sigma_z: f64 },
    /// Uniform on `[-B, B]`; variance `B^2/3`, fourth moment `B^4/5`.
    Uniform { bound_b: f64 },
    /// `N(0, sigma_z^2)` conditioned on `|Z| <= B`.
    TruncatedGaussian { sigma_z: f64, bound_b: f64 },
}

/// Panels used for the truncated-Gaussian moment integrals.
const MOMENT_PANELS: usize = 4_000;

impl NoiseModel {
    pub fn gaussian(sigma_z: f64) -> Result<Self> {
        let m = NoiseModel::Gaussian { sigma_z };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(bound_b: f64) -> Result<Self> {
        let m = NoiseModel::Uniform { bound_b };
        m.validate()?;
        Ok(m)
    }

    pub fn truncated_gaussian(sigma_z: f64, bound_b: f64) -> Result<Self> {
        let m = NoiseModel::TruncatedGaussian { sigma_z, bound_b };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma_z } => positive("sigma_z", sigma_z),
            NoiseModel::Uniform { bound_b } => positive("bound_b", bound_b),
            NoiseModel::TruncatedGaussian { sigma_z, bound_b } => {
                positive("sigma_z", sigma_z)?;
                positive("bound_b", bound_b)
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NoiseModel::Gaussian { .. } => "Gaussian",
            NoiseModel::Uniform { .. } => "Uniform",
            NoiseModel::TruncatedGaussian { .. } => "TruncatedGaussian",
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, NoiseModel::Gaussian { .. })
    }

    /// Support bound `B`, if the support is bounded.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            NoiseModel::Gaussian { .. } => None,
            NoiseModel::Uniform { bound_b } | NoiseModel::TruncatedGaussian { bound_b, .. } => {
                Some(bound_b)
            }
        }
    }

    /// `sigma_Z^2 = E[Z^2]`.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma_z } => sigma_z * sigma_z,
            NoiseModel::Uniform { bound_b } => bound_b * bound_b / 3.0,
            NoiseModel::TruncatedGaussian { .. } => self.truncated_moment(2),
        }
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.variance())
    }

    /// `m_Z(4) = E[Z^4]`.
    pub fn fourth_moment(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma_z } => 3.0 * powi(sigma_z, 4),
            NoiseModel::Uniform { bound_b } => powi(bound_b, 4) / 5.0,
            NoiseModel::TruncatedGaussian { .. } => self.truncated_moment(4),
        }
    }

    fn truncated_moment(&self, k: u32) -> f64 {
        let NoiseModel::TruncatedGaussian { sigma_z, bound_b } = *self else {
            unreachable!("truncated_moment on a non-truncated model");
        };
        let beta = bound_b / sigma_z;
        let mass = normal_cdf(beta) - normal_cdf(-beta);
        let integral =
            composite_simpson(|u| powi(u, k) * normal_pdf(u), -beta, beta, MOMENT_PANELS);
        powi(sigma_z, k) * integral / mass
    }

    /// Draws one `Z` by inverse CDF from the stream (one uniform per draw).
    pub fn sample(&self, stream: &mut SampleStream) -> f64 {
        let u = stream.uniform_open();
        match *self {
            NoiseModel::Gaussian { sigma_z } => sigma_z * normal_quantile(u),
            NoiseModel::Uniform { bound_b } => bound_b * (2.0 * u - 1.0),
            NoiseModel::TruncatedGaussian { sigma_z, bound_b } => {
                let beta = bound_b / sigma_z;
                let lo = normal_cdf(-beta);
                let hi = normal_cdf(beta);
                let z = sigma_z * normal_quantile(lo + u * (hi - lo));
                z.clamp(-bound_b, bound_b)
            }
        }
    }
}
