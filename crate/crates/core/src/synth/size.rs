use std::f64::consts::PI;

use rand::Rng;

use super::SynthesisConfig;
use crate::cohortstats::TumorStatsModel;
use crate::error::{Error, Result};

/// Rejection budget per stratum before the strata are declared inconsistent
/// with the model.
pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeDraw {
    pub ratio: f64,
    pub stratum: usize,
}

/// Picks a stratum by normalized weight, then rejection-samples the size
/// distribution inside `(previous bound, bound]`.
pub fn sample_size_ratio<R: Rng + ?Sized>(
    model: &TumorStatsModel,
    cfg: &SynthesisConfig,
    rng: &mut R,
) -> Result<SizeDraw> {
    let total: f64 = cfg.strata.iter().map(|s| s.weight).sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut stratum = cfg.strata.len() - 1;
    for (i, s) in cfg.strata.iter().enumerate() {
        if s.weight > 0.0 {
            acc += s.weight;
            stratum = i;
            if u < acc {
                break;
            }
        }
    }
    let lo = if stratum == 0 {
        0.0
    } else {
        cfg.strata[stratum - 1].upper.unwrap_or(f64::INFINITY)
    };
    let hi = cfg.strata[stratum].upper.unwrap_or(f64::INFINITY);
    let cap = cfg.strata.last().and_then(|s| s.upper).unwrap_or(f64::INFINITY);
    for _ in 0..MAX_REJECTIONS {
        let x = model.size_ratio_dist.sample(rng);
        if x > lo && x <= hi {
            return Ok(SizeDraw {
                ratio: x.min(cap),
                stratum,
            });
        }
    }
    Err(Error::StratumExhausted {
        stratum,
        attempts: MAX_REJECTIONS,
    })
}

/// Radius of the sphere with volume `volume_mm3`.
pub fn sphere_radius(volume_mm3: f64) -> f64 {
    (3.0 * volume_mm3 / (4.0 * PI)).cbrt()
}

/// Ellipsoid semi-axes (mm) whose volume equals `ratio * pancreas_volume_mm3`.
/// Per-axis multipliers are drawn uniformly from `axis_ratio_range` and then
/// rescaled so that `a * b * c = r0^3`.
pub fn derive_semi_axes<R: Rng + ?Sized>(
    ratio: f64,
    pancreas_volume_mm3: f64,
    cfg: &SynthesisConfig,
    rng: &mut R,
) -> [f64; 3] {
    let r0 = sphere_radius(ratio * pancreas_volume_mm3);
    let [lo, hi] = cfg.axis_ratio_range;
    let mult: [f64; 3] = std::array::from_fn(|_| lo + (hi - lo) * rng.random::<f64>());
    let k = (mult[0] * mult[1] * mult[2]).cbrt().recip();
    mult.map(|m| r0 * k * m)
}
