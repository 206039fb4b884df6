use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::shape::LocalMask;
use crate::cohortstats::{neighborhood_values, RegressionParams};
use crate::error::{Error, Result};
use crate::numeric::lower_median;
use crate::volgrid::{Geometry, Mask, Volume};

/// Fewest pancreas voxels accepted for the neighborhood median.
pub const MIN_NEIGHBORHOOD_VOXELS: usize = 10;
/// The radius grows by this factor, at most [`MAX_RADIUS_EXPANSIONS`] times.
pub const RADIUS_GROWTH: f64 = 1.5;
pub const MAX_RADIUS_EXPANSIONS: usize = 3;

/// Whether global voxel `i` is covered by `tumor` placed at `center`.
pub(crate) fn covers(g: &Geometry, tumor: &LocalMask, center: [usize; 3], i: usize) -> bool {
    let p = g.coords(i);
    tumor.get(std::array::from_fn(|a| {
        p[a] as i64 - center[a] as i64 + tumor.center[a] as i64
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodMedian {
    pub median: f64,
    /// Radius that finally yielded enough voxels.
    pub radius_mm: f64,
    pub voxels: usize,
}

/// Median pancreas HU around `center`, ignoring the tumor footprint. Only
/// pancreas-labeled voxels count, so tumors near the organ boundary never
/// sample neighboring organs.
pub fn neighborhood_median(
    volume: &Volume,
    pancreas: &Mask,
    center: [usize; 3],
    radius_mm: f64,
    exclude: &LocalMask,
) -> Result<NeighborhoodMedian> {
    let g = volume.geometry();
    g.ensure_same(pancreas.geometry(), "pancreas mask vs volume")?;
    if !(radius_mm.is_finite() && radius_mm > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius_mm}")));
    }
    let c = center.map(|v| v as f64);
    let mut r = radius_mm;
    for step in 0..=MAX_RADIUS_EXPANSIONS {
        let mut vals = neighborhood_values(volume, pancreas, c, r, |i| covers(g, exclude, center, i));
        if vals.len() >= MIN_NEIGHBORHOOD_VOXELS {
            let voxels = vals.len();
            let median = lower_median(&mut vals).expect("non-empty");
            return Ok(NeighborhoodMedian {
                median,
                radius_mm: r,
                voxels,
            });
        }
        if step < MAX_RADIUS_EXPANSIONS {
            r *= RADIUS_GROWTH;
        }
    }
    Err(Error::NeighborhoodTooSmall(format!(
        "fewer than {MIN_NEIGHBORHOOD_VOXELS} pancreas voxels within {r:.2} mm of {center:?}"
    )))
}

/// One draw of the intensity difference between pancreas and tumor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityDraw {
    pub delta_i: f64,
    pub eps: f64,
}

/// `delta_i = alpha * m + beta + eps`, `eps ~ Normal(0, sigma_eps^2)`.
pub fn compute_delta_i<R: Rng + ?Sized>(m: f64, reg: &RegressionParams, rng: &mut R) -> IntensityDraw {
    let z: f64 = rng.sample(StandardNormal);
    let eps = reg.sigma_eps * z;
    IntensityDraw {
        delta_i: reg.alpha * m + reg.beta + eps,
        eps,
    }
}

/// Per-voxel tumor HU on the footprint's grid; voxels outside the footprint
/// are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureField {
    pub mean: f64,
    pub values: Vec<Option<f64>>,
}

/// Each footprint voxel draws `Normal(m - delta_i, sigma^2)` in raster order.
pub fn generate_texture<R: Rng + ?Sized>(
    tumor: &LocalMask,
    m: f64,
    delta_i: f64,
    sigma_hu: f64,
    rng: &mut R,
) -> TextureField {
    let mean = m - delta_i;
    let values = tumor
        .data
        .iter()
        .map(|&inside| {
            inside.then(|| {
                let z: f64 = rng.sample(StandardNormal);
                mean + sigma_hu * z
            })
        })
        .collect();
    TextureField { mean, values }
}
