use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `delta = alpha * m + beta + eps`, `eps ~ Normal(0, sigma_eps^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma_eps: f64,
}

impl RegressionParams {
    pub fn new(alpha: f64, beta: f64, sigma_eps: f64) -> Result<Self> {
        let p = RegressionParams { alpha, beta, sigma_eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.sigma_eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite regression parameters {self:?}"
            )));
        }
        if self.sigma_eps < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma_eps must be >= 0, got {}",
                self.sigma_eps
            )));
        }
        Ok(())
    }
}

/// Ordinary least squares of `delta` on `m`. `sigma_eps` is the residual
/// standard deviation with an `n` denominator.
pub fn fit_intensity_regression(pairs: &[(f64, f64)]) -> Result<RegressionParams> {
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "regression needs >= 2 pairs, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("all m values are identical".into()));
    }
    let alpha = sxy / sxx;
    let beta = my - alpha * mx;
    let ss_res: f64 = pairs
        .iter()
        .map(|&(x, y)| {
            let r = y - (alpha * x + beta);
            r * r
        })
        .sum();
    RegressionParams::new(alpha, beta, (ss_res / n).sqrt())
}
