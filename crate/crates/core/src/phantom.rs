//! Procedural CT phantoms: an ellipsoidal "pancreas" in a uniform
//! background, optionally with Gaussian voxel noise and a spherical lesion.
//! Used by tests, benchmarks and the CLI's `phantom` command.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cohortstats::{
    OffsetHistogram, RegressionParams, SkewNormalParams, TumorStatsModel, TumorType, DEFAULT_NEIGHBORHOOD_RADIUS_MM,
    OFFSET_Z_BINS, SCHEMA_VERSION,
};
use crate::rng::rng_from_seed;
use crate::volgrid::{Geometry, Mask, Volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub pancreas_semi_axes_mm: [f64; 3],
    pub pancreas_hu: f64,
    pub background_hu: f64,
    pub noise_hu: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    /// 64^3 grid at 2 mm with a 90 HU pancreas in a -100 HU background.
    fn default() -> Self {
        PhantomSpec {
            dims: [64, 64, 64],
            spacing: [2.0; 3],
            pancreas_semi_axes_mm: [50.0, 30.0, 40.0],
            pancreas_hu: 90.0,
            background_hu: -100.0,
            noise_hu: 0.0,
            seed: 0,
        }
    }
}

impl PhantomSpec {
    /// 32^3 grid at 1 mm, for fast unit tests.
    pub fn small() -> Self {
        PhantomSpec {
            dims: [32, 32, 32],
            spacing: [1.0; 3],
            pancreas_semi_axes_mm: [12.0, 8.0, 10.0],
            ..PhantomSpec::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub volume: Volume,
    pub pancreas: Mask,
}

pub fn phantom(spec: &PhantomSpec) -> Phantom {
    let g = Geometry::new(spec.dims, spec.spacing, [0.0; 3]).expect("valid phantom geometry");
    let center: [f64; 3] = std::array::from_fn(|a| (spec.dims[a] as f64 - 1.0) / 2.0);
    let pancreas = Mask::from_fn(g, |p| {
        (0..3)
            .map(|a| ((p[a] as f64 - center[a]) * spec.spacing[a] / spec.pancreas_semi_axes_mm[a]).powi(2))
            .sum::<f64>()
            <= 1.0
    });
    let mut rng = rng_from_seed(spec.seed);
    let values = (0..g.len())
        .map(|i| {
            let base = if pancreas.is_set(i) {
                spec.pancreas_hu
            } else {
                spec.background_hu
            };
            let noise = if spec.noise_hu > 0.0 {
                spec.noise_hu * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            (base + noise) as f32
        })
        .collect();
    Phantom {
        volume: Volume::new(g, values).expect("finite phantom values"),
        pancreas,
    }
}

impl Phantom {
    /// Reference model for phantom experiments: PDAC-like hypodense tumors
    /// (`alpha = 0.3`, `beta = 15`, `sigma_eps = 3`) with a right-skewed
    /// size ratio and a flat z-offset histogram.
    pub fn model(&self) -> TumorStatsModel {
        TumorStatsModel {
            schema_version: SCHEMA_VERSION,
            tumor_type: TumorType::Pdac,
            size_ratio_dist: SkewNormalParams::new(0.02, 0.12, 4.0).expect("valid"),
            intensity_regression: RegressionParams::new(0.3, 15.0, 3.0).expect("valid"),
            offset_z_hist: OffsetHistogram::uniform(OFFSET_Z_BINS),
            neighborhood_radius_mm: DEFAULT_NEIGHBORHOOD_RADIUS_MM,
            n_cases: 0,
        }
    }

    /// Copy of the phantom with a spherical lesion of constant HU; returns the
    /// modified volume and the lesion mask.
    pub fn with_lesion(&self, center: [usize; 3], radius_mm: f64, hu: f32) -> (Volume, Mask) {
        let g = *self.volume.geometry();
        let lesion = Mask::from_fn(g, |p| {
            (0..3)
                .map(|a| ((p[a] as f64 - center[a] as f64) * g.spacing[a]).powi(2))
                .sum::<f64>()
                <= radius_mm * radius_mm
        });
        let values = self
            .volume
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| if lesion.is_set(i) { hu } else { v })
            .collect();
        (Volume::new(g, values).expect("finite"), lesion)
    }
}
