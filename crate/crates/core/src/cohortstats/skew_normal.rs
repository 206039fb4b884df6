//! Skew-normal distribution: moment fit and sampling.

use std::f64::consts::{FRAC_2_PI, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::central_moments;

/// Sample skewness is clamped to this magnitude before inversion; the
/// family's supremum is about 0.99527.
pub const MAX_SKEWNESS: f64 = 0.9952;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkewNormalParams {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
}

impl SkewNormalParams {
    pub fn new(location: f64, scale: f64, shape: f64) -> Result<Self> {
        let p = SkewNormalParams { location, scale, shape };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.location.is_finite() && self.scale.is_finite() && self.shape.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite skew-normal parameters {self:?}"
            )));
        }
        if self.scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "skew-normal scale must be > 0, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        self.shape / (1.0 + self.shape * self.shape).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.location + self.scale * self.delta() * FRAC_2_PI.sqrt()
    }

    pub fn variance(&self) -> f64 {
        let d = self.delta();
        self.scale * self.scale * (1.0 - FRAC_2_PI * d * d)
    }

    pub fn skewness(&self) -> f64 {
        let b = self.delta() * FRAC_2_PI.sqrt();
        (4.0 - PI) / 2.0 * b.powi(3) / (1.0 - b * b).powf(1.5)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        sample_skew_normal(self, rng)
    }
}

/// Method-of-moments fit using population moments.
pub fn fit_skew_normal(samples: &[f64]) -> Result<SkewNormalParams> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "skew-normal fit needs >= 3 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let (mean, var, m3) = central_moments(samples);
    if !(var > 0.0) {
        return Err(Error::InsufficientData("samples have zero variance".into()));
    }
    let gamma = (m3 / var.powf(1.5)).clamp(-MAX_SKEWNESS, MAX_SKEWNESS);

    // invert gamma = (4 - pi)/2 * b^3 / (1 - b^2)^1.5 with b = delta * sqrt(2/pi)
    let t = (2.0 * gamma.abs() / (4.0 - PI)).cbrt();
    let b2 = t * t / (1.0 + t * t);
    let delta = gamma.signum() * (b2 / FRAC_2_PI).sqrt();
    let delta = if gamma == 0.0 { 0.0 } else { delta };
    let shape = delta / (1.0 - delta * delta).sqrt();
    let scale = (var / (1.0 - FRAC_2_PI * delta * delta)).sqrt();
    let location = mean - scale * delta * FRAC_2_PI.sqrt();
    SkewNormalParams::new(location, scale, shape)
}

/// `xi + omega * (delta*|u0| + sqrt(1 - delta^2)*u1)` with `u0`, `u1` standard
/// normal, drawn in that order.
pub fn sample_skew_normal<R: Rng + ?Sized>(p: &SkewNormalParams, rng: &mut R) -> f64 {
    let delta = p.delta();
    let u0: f64 = rng.sample(StandardNormal);
    let u1: f64 = rng.sample(StandardNormal);
    let z = delta * u0.abs() + (1.0 - delta * delta).sqrt() * u1;
    p.location + p.scale * z
}
