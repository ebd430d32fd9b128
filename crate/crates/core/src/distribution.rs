//! Radial occupation-number densities n(k) of the environment: the control.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of Gaussian components in the shipped mixtures.
pub const DEFAULT_COMPONENTS: usize = 10;
/// Envelope decay for radiation mixtures, exp(−k/20).
pub const RADIATION_ENVELOPE_BETA: f64 = 1.0 / 20.0;
/// Envelope decay for gas mixtures, exp(−0.01 k²).
pub const GAS_ENVELOPE_BETA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Envelope {
    /// exp(−βk)
    LinearExp,
    /// exp(−βk²)
    QuadraticExp,
}

impl Envelope {
    fn eval(self, beta: f64, k: f64) -> f64 {
        match self {
            Envelope::LinearExp => (-beta * k).exp(),
            Envelope::QuadraticExp => (-beta * k * k).exp(),
        }
    }
}

/// envelope(k) · Σᵢ exp[−(k−kᵢ)²/2Dᵢ] / √(2πDᵢ)
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    centers: Vec<f64>,
    widths: Vec<f64>,
    envelope: Envelope,
    beta: f64,
}

impl MixtureParams {
    pub fn new(centers: Vec<f64>, widths: Vec<f64>, envelope: Envelope, beta: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::param("centers", "at least one component required"));
        }
        if centers.len() != widths.len() {
            return Err(Error::param(
                "widths",
                format!("{} widths for {} centers", widths.len(), centers.len()),
            ));
        }
        if centers.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(Error::param("centers", "must be finite and non-negative"));
        }
        if widths.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::param("widths", "must be finite and positive"));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::param("beta", "must be finite and non-negative"));
        }
        Ok(Self {
            centers,
            widths,
            envelope,
            beta,
        })
    }

    pub fn check_bounds(&self, k_range: (f64, f64)) -> Result<()> {
        if self.centers.iter().any(|&k| k < k_range.0 || k > k_range.1) {
            return Err(Error::param(
                "centers",
                format!("outside [{}, {}]", k_range.0, k_range.1),
            ));
        }
        Ok(())
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn envelope(&self) -> Envelope {
        self.envelope
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    fn eval(&self, k: f64) -> f64 {
        let sum: f64 = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(&ki, &di)| (-(k - ki).powi(2) / (2.0 * di)).exp() / (2.0 * PI * di).sqrt())
            .sum();
        self.envelope.eval(self.beta, k) * sum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvDistribution {
    Mixture(MixtureParams),
    /// Black-body radiation at temperature T (ħ = c = k_B = 1).
    Planck {
        temperature: f64,
    },
    /// Equilibrium gas: C e^{−βk²/2M}.
    Boltzmann {
        beta: f64,
        total_density: f64,
        mass: f64,
    },
    Vacuum,
}

impl EnvDistribution {
    pub fn planck(temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::param("temperature", "must be positive and finite"));
        }
        Ok(Self::Planck { temperature })
    }

    pub fn boltzmann(beta: f64, total_density: f64, mass: f64) -> Result<Self> {
        boltzmann_normalization(beta, total_density, mass)?;
        Ok(Self::Boltzmann {
            beta,
            total_density,
            mass,
        })
    }

    /// Radial density n(k). For Planck radiation this is the spectral number
    /// density (k²/π²)/(e^{k/T} − 1).
    pub fn eval_density(&self, k: f64) -> Result<f64> {
        if k < 0.0 || k.is_nan() {
            return Err(Error::NegativeMomentum(k));
        }
        Ok(match self {
            EnvDistribution::Mixture(m) => m.eval(k),
            EnvDistribution::Planck { temperature } => {
                if k == 0.0 {
                    0.0
                } else {
                    (k * k / (PI * PI)) / (k / temperature).exp_m1()
                }
            }
            EnvDistribution::Boltzmann {
                beta,
                total_density,
                mass,
            } => {
                let norm = boltzmann_normalization(*beta, *total_density, *mass)?;
                norm * (-beta * k * k / (2.0 * mass)).exp()
            }
            EnvDistribution::Vacuum => 0.0,
        })
    }

    /// Mean number of quanta per mode at momentum k, as consumed by the
    /// dissipators. Equal to the density except for Planck radiation, whose
    /// per-mode occupation is the Bose factor 1/(e^{k/T} − 1).
    pub fn mode_occupation(&self, k: f64) -> Result<f64> {
        match self {
            EnvDistribution::Planck { temperature } => {
                if k < 0.0 || k.is_nan() {
                    return Err(Error::NegativeMomentum(k));
                }
                Ok(1.0 / (k / temperature).exp_m1())
            }
            _ => self.eval_density(k),
        }
    }
}

/// Mode occupation n(k) as seen by a dissipator.
pub trait Occupation: Sync {
    fn occupation(&self, k: f64) -> Result<f64>;
}

impl Occupation for EnvDistribution {
    fn occupation(&self, k: f64) -> Result<f64> {
        self.mode_occupation(k)
    }
}

/// C(β, n) such that ∫ d³k C e^{−βk²/2M} = n.
pub fn boltzmann_normalization(beta: f64, total_density: f64, mass: f64) -> Result<f64> {
    for (name, v) in [
        ("beta", beta),
        ("total_density", total_density),
        ("mass", mass),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(name, "must be positive and finite"));
        }
    }
    Ok(total_density * (beta / (2.0 * PI * mass)).powf(1.5))
}

/// `points` uniformly spaced samples of n(k) on [k_min, k_max], endpoints included.
pub fn sample_density(
    dist: &EnvDistribution,
    k_min: f64,
    k_max: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    if !(k_min < k_max) || k_min < 0.0 || !k_max.is_finite() {
        return Err(Error::InvalidRange {
            lo: k_min,
            hi: k_max,
        });
    }
    if points < 2 {
        return Err(Error::param("points", "need at least two samples"));
    }
    let step = (k_max - k_min) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            let k = if i + 1 == points {
                k_max
            } else {
                k_min + step * i as f64
            };
            dist.eval_density(k).map(|n| (k, n))
        })
        .collect()
}
