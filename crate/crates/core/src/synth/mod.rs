//! Tumor synthesis: shape, position and texture generation.
//!
//! [`synthesize_tumor`] composes the steps below for each requested tumor:
//!
//! 1. [`sample_size_ratio`] draws a tumor/pancreas volume ratio from the
//!    model's skew-normal, stratified to oversample small tumors;
//! 2. [`derive_semi_axes`] and [`rasterize_ellipsoid`] turn it into an
//!    ellipsoidal footprint, which [`elastic_deform`] roughens;
//! 3. [`sample_position`] picks a pancreas voxel as the center;
//! 4. [`neighborhood_median`] measures the surrounding pancreas HU `m`,
//!    [`compute_delta_i`] predicts `delta_i = alpha*m + beta + eps` and
//!    [`generate_texture`] fills the footprint with `Normal(m - delta_i, sigma^2)`;
//! 5. [`blend`] feathers the texture into the scan with a Gaussian weight.

mod blend;
mod position;
mod shape;
mod size;
mod texture;

pub use blend::{blend, blend_into, BlendOutcome};
pub use position::{sample_position, PancreasIndex};
pub use shape::{elastic_deform, rasterize_ellipsoid, LocalMask};
pub use size::{derive_semi_axes, sample_size_ratio, sphere_radius, SizeDraw, MAX_REJECTIONS};
pub use texture::{
    compute_delta_i, generate_texture, neighborhood_median, IntensityDraw, NeighborhoodMedian, TextureField,
    MIN_NEIGHBORHOOD_VOXELS,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cohortstats::TumorStatsModel;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::volgrid::{Mask, Volume};

/// Placement retries per tumor before giving up on it.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 50;

/// Size-ratio stratum `(previous upper, upper]`; `upper = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stratum {
    pub upper: Option<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisConfig {
    pub strata: Vec<Stratum>,
    /// Per-axis anisotropy multipliers `[lo, hi]`, `0 < lo <= 1 <= hi`.
    pub axis_ratio_range: [f64; 2],
    pub elastic_sigma_mm: f64,
    pub elastic_magnitude_mm: f64,
    pub texture_sigma_hu: f64,
    /// Edge feathering; `0` disables blurring.
    pub blur_sigma_mm: f64,
    /// Blend weight at or above which a voxel is labeled tumor.
    pub core_threshold: f64,
    pub tumors_per_volume: usize,
    pub seed: u64,
    /// Skip the overlap check against earlier tumors and existing lesions.
    pub allow_overlap: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            strata: vec![
                Stratum {
                    upper: Some(0.01),
                    weight: 0.3,
                },
                Stratum {
                    upper: Some(0.05),
                    weight: 0.3,
                },
                Stratum {
                    upper: Some(0.25),
                    weight: 0.3,
                },
                Stratum {
                    upper: None,
                    weight: 0.1,
                },
            ],
            axis_ratio_range: [0.8, 1.25],
            elastic_sigma_mm: 4.0,
            elastic_magnitude_mm: 2.0,
            texture_sigma_hu: 6.0,
            blur_sigma_mm: 1.0,
            core_threshold: 0.5,
            tumors_per_volume: 1,
            seed: 0,
            allow_overlap: false,
        }
    }
}

impl SynthesisConfig {
    /// One open stratum: the raw size distribution restricted to positives.
    pub fn unstratified() -> Vec<Stratum> {
        vec![Stratum {
            upper: None,
            weight: 1.0,
        }]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.strata.is_empty() {
            return bad("at least one stratum is required".into());
        }
        let mut prev = 0.0;
        for (i, s) in self.strata.iter().enumerate() {
            if !(s.weight.is_finite() && s.weight >= 0.0) {
                return bad(format!("stratum {i} weight must be >= 0, got {}", s.weight));
            }
            match s.upper {
                Some(u) if !(u.is_finite() && u > prev) => {
                    return bad(format!("stratum {i} upper bound {u} must exceed {prev}"));
                }
                Some(u) => prev = u,
                None if i + 1 != self.strata.len() => {
                    return bad(format!("only the last stratum may be unbounded (stratum {i})"));
                }
                None => {}
            }
        }
        if !(self.strata.iter().map(|s| s.weight).sum::<f64>() > 0.0) {
            return bad("strata weights must sum to > 0".into());
        }
        let [lo, hi] = self.axis_ratio_range;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0 && hi.is_finite()) {
            return bad(format!(
                "axis_ratio_range must satisfy 0 < lo <= 1 <= hi, got {:?}",
                self.axis_ratio_range
            ));
        }
        if !(self.elastic_sigma_mm.is_finite() && self.elastic_sigma_mm > 0.0) {
            return bad(format!("elastic_sigma_mm must be > 0, got {}", self.elastic_sigma_mm));
        }
        for (name, v) in [
            ("elastic_magnitude_mm", self.elastic_magnitude_mm),
            ("texture_sigma_hu", self.texture_sigma_hu),
            ("blur_sigma_mm", self.blur_sigma_mm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be >= 0, got {v}"));
            }
        }
        if !(self.core_threshold > 0.0 && self.core_threshold <= 1.0) {
            return bad(format!("core_threshold must be in (0, 1], got {}", self.core_threshold));
        }
        if self.tumors_per_volume == 0 {
            return bad("tumors_per_volume must be >= 1".into());
        }
        Ok(())
    }
}

/// Everything sampled for one synthetic tumor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TumorProvenance {
    pub label: u16,
    pub stratum_index: usize,
    pub size_ratio: f64,
    pub target_volume_mm3: f64,
    pub semi_axes_mm: [f64; 3],
    /// Voxels of the ellipsoid before deformation.
    pub raster_voxels: usize,
    /// The ellipsoid was smaller than a voxel and collapsed to its center.
    pub subvoxel: bool,
    pub deformed_voxels: usize,
    pub center_voxel: [usize; 3],
    pub position_attempts: usize,
    pub neighborhood_median: f64,
    pub neighborhood_radius_mm: f64,
    pub delta_i: f64,
    pub eps: f64,
    pub texture_mean: f64,
    pub mask_voxels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub tumors_requested: usize,
    pub tumors_placed: usize,
    /// Fewer tumors than requested could be placed without overlap.
    pub count_reduced: bool,
    pub tumors: Vec<TumorProvenance>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub volume: Volume,
    /// Tumor `k` (1-based) carries label `k`.
    pub tumor_mask: Mask,
    pub provenance: Provenance,
}

/// Synthesizes `cfg.tumors_per_volume` tumors using the stream seeded by
/// `cfg.seed`.
pub fn synthesize_tumor(
    volume: &Volume,
    pancreas: &Mask,
    model: &TumorStatsModel,
    cfg: &SynthesisConfig,
) -> Result<SynthesisResult> {
    synthesize_with_seed(volume, pancreas, None, model, cfg, cfg.seed)
}

/// Full pipeline with an explicit seed. Tumors avoid each other and any
/// voxel labeled in `existing_lesions` unless `cfg.allow_overlap` is set.
pub fn synthesize_with_seed(
    volume: &Volume,
    pancreas: &Mask,
    existing_lesions: Option<&Mask>,
    model: &TumorStatsModel,
    cfg: &SynthesisConfig,
    seed: u64,
) -> Result<SynthesisResult> {
    let mut rng = rng_from_seed(seed);
    let (out, mask, tumors) = synthesize_with_rng(volume, pancreas, existing_lesions, model, cfg, &mut rng)?;
    if tumors.is_empty() {
        return Err(Error::PlacementFailed(MAX_PLACEMENT_ATTEMPTS));
    }
    Ok(SynthesisResult {
        volume: out,
        tumor_mask: mask,
        provenance: Provenance {
            seed,
            tumors_requested: cfg.tumors_per_volume,
            tumors_placed: tumors.len(),
            count_reduced: tumors.len() < cfg.tumors_per_volume,
            tumors,
        },
    })
}

fn synthesize_with_rng<R: Rng + ?Sized>(
    volume: &Volume,
    pancreas: &Mask,
    existing_lesions: Option<&Mask>,
    model: &TumorStatsModel,
    cfg: &SynthesisConfig,
    rng: &mut R,
) -> Result<(Volume, Mask, Vec<TumorProvenance>)> {
    cfg.validate()?;
    model.validate()?;
    let g = *volume.geometry();
    g.ensure_same(pancreas.geometry(), "pancreas mask vs volume")?;
    if let Some(l) = existing_lesions {
        g.ensure_same(l.geometry(), "lesion mask vs volume")?;
    }
    let index = PancreasIndex::new(pancreas)?;
    let pancreas_volume_mm3 = index.count() as f64 * g.voxel_volume();

    let mut out = volume.clone();
    let mut mask = Mask::zeros(g);
    let mut tumors = Vec::with_capacity(cfg.tumors_per_volume);
    for k in 0..cfg.tumors_per_volume {
        let label = u16::try_from(k + 1).map_err(|_| Error::InvalidParameter("too many tumors per volume".into()))?;
        let size = sample_size_ratio(model, cfg, rng)?;
        let semi_axes = derive_semi_axes(size.ratio, pancreas_volume_mm3, cfg, rng);
        let ellipsoid = rasterize_ellipsoid(semi_axes, g.spacing);
        let raster_voxels = ellipsoid.count();
        let footprint = elastic_deform(&ellipsoid, g.spacing, cfg, rng);

        let mut placed = None;
        for attempt in 1..=MAX_PLACEMENT_ATTEMPTS {
            let center = g.coords(index.sample(&model.offset_z_hist, rng));
            let clear = cfg.allow_overlap || !overlaps(&mask, existing_lesions, &footprint, center);
            if clear {
                placed = Some((center, attempt));
                break;
            }
        }
        let Some((center, position_attempts)) = placed else {
            break;
        };

        let near = neighborhood_median(volume, pancreas, center, model.neighborhood_radius_mm, &footprint)?;
        let draw = compute_delta_i(near.median, &model.intensity_regression, rng);
        let texture = generate_texture(&footprint, near.median, draw.delta_i, cfg.texture_sigma_hu, rng);
        let blended = blend_into(&mut out, &mut mask, label, center, &footprint, &texture, cfg)?;

        tumors.push(TumorProvenance {
            label,
            stratum_index: size.stratum,
            size_ratio: size.ratio,
            target_volume_mm3: size.ratio * pancreas_volume_mm3,
            semi_axes_mm: semi_axes,
            raster_voxels,
            subvoxel: raster_voxels == 1,
            deformed_voxels: footprint.count(),
            center_voxel: center,
            position_attempts,
            neighborhood_median: near.median,
            neighborhood_radius_mm: near.radius_mm,
            delta_i: draw.delta_i,
            eps: draw.eps,
            texture_mean: texture.mean,
            mask_voxels: blended.labeled_voxels,
        });
    }
    Ok((out, mask, tumors))
}

fn overlaps(mask: &Mask, lesions: Option<&Mask>, footprint: &LocalMask, center: [usize; 3]) -> bool {
    let g = mask.geometry();
    footprint.offsets().any(|o| {
        let p: [i64; 3] = std::array::from_fn(|a| center[a] as i64 + o[a]);
        g.checked_index(p)
            .is_some_and(|i| mask.is_set(i) || lesions.is_some_and(|l| l.is_set(i)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{phantom, PhantomSpec};
    use crate::volgrid::Geometry;

    #[test]
    fn default_config_is_valid() {
        SynthesisConfig::default().validate().unwrap();
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let base = SynthesisConfig::default();
        let cases: Vec<SynthesisConfig> = vec![
            SynthesisConfig {
                strata: vec![],
                ..base.clone()
            },
            SynthesisConfig {
                strata: vec![
                    Stratum {
                        upper: None,
                        weight: 1.0,
                    },
                    Stratum {
                        upper: Some(0.1),
                        weight: 1.0,
                    },
                ],
                ..base.clone()
            },
            SynthesisConfig {
                strata: vec![
                    Stratum {
                        upper: Some(0.2),
                        weight: 1.0,
                    },
                    Stratum {
                        upper: Some(0.1),
                        weight: 1.0,
                    },
                ],
                ..base.clone()
            },
            SynthesisConfig {
                strata: vec![Stratum {
                    upper: None,
                    weight: 0.0,
                }],
                ..base.clone()
            },
            SynthesisConfig {
                axis_ratio_range: [1.2, 1.5],
                ..base.clone()
            },
            SynthesisConfig {
                elastic_sigma_mm: 0.0,
                ..base.clone()
            },
            SynthesisConfig {
                texture_sigma_hu: -1.0,
                ..base.clone()
            },
            SynthesisConfig {
                core_threshold: 0.0,
                ..base.clone()
            },
            SynthesisConfig {
                tumors_per_volume: 0,
                ..base.clone()
            },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn config_json_uses_null_for_open_stratum() {
        let text = serde_json::to_string(&SynthesisConfig::default()).unwrap();
        assert!(text.contains(r#"{"upper":null,"weight":0.1}"#));
        let back: SynthesisConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, SynthesisConfig::default());
        let partial: SynthesisConfig = serde_json::from_str(r#"{"seed": 9}"#).unwrap();
        assert_eq!(partial.seed, 9);
        assert!(serde_json::from_str::<SynthesisConfig>(r#"{"sed": 9}"#).is_err());
    }

    #[test]
    fn same_seed_same_result() {
        let ph = phantom(&PhantomSpec::small());
        let cfg = SynthesisConfig {
            tumors_per_volume: 2,
            seed: 31,
            ..SynthesisConfig::default()
        };
        let model = ph.model();
        let a = synthesize_tumor(&ph.volume, &ph.pancreas, &model, &cfg).unwrap();
        let b = synthesize_tumor(&ph.volume, &ph.pancreas, &model, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.provenance.tumors_placed, 2);
        for t in &a.provenance.tumors {
            let [x, y, z] = t.center_voxel;
            assert!(ph.pancreas.is_set(ph.volume.geometry().index(x, y, z)));
            assert!(t.mask_voxels > 0);
        }
    }

    #[test]
    fn two_tumors_get_disjoint_labels() {
        let ph = phantom(&PhantomSpec::small());
        let cfg = SynthesisConfig {
            tumors_per_volume: 2,
            seed: 4,
            ..SynthesisConfig::default()
        };
        let r = synthesize_tumor(&ph.volume, &ph.pancreas, &ph.model(), &cfg).unwrap();
        let labels: std::collections::BTreeSet<u16> =
            r.tumor_mask.labels().iter().copied().filter(|&l| l > 0).collect();
        assert_eq!(labels.into_iter().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn crowded_pancreas_reduces_count() {
        // pancreas: a radius-2 ball around c plus a slab that existing lesions
        // block; a radius-4.5 tumor anywhere in the ball covers the whole ball
        let g = Geometry::isotropic([32, 32, 32], 1.0).unwrap();
        let c = [12i64, 16, 16];
        let d2 = |p: [usize; 3]| (0..3).map(|a| (p[a] as i64 - c[a]).pow(2)).sum::<i64>();
        let in_slab =
            |p: [usize; 3]| (20..=22).contains(&p[0]) && (13..=19).contains(&p[1]) && (13..=19).contains(&p[2]);
        let pancreas = Mask::from_fn(g, |p| d2(p) <= 4 || in_slab(p));
        let lesions = Mask::from_fn(g, in_slab);
        let v = Volume::filled(g, 90.0);
        let ratio = (4.0 / 3.0 * std::f64::consts::PI * 4.5f64.powi(3)) / pancreas.count() as f64;
        let mut model = phantom(&PhantomSpec::small()).model();
        model.size_ratio_dist = crate::cohortstats::SkewNormalParams::new(ratio, 1e-9, 0.0).unwrap();
        let cfg = SynthesisConfig {
            tumors_per_volume: 2,
            strata: SynthesisConfig::unstratified(),
            axis_ratio_range: [1.0, 1.0],
            elastic_magnitude_mm: 0.0,
            ..SynthesisConfig::default()
        };
        let r = synthesize_with_seed(&v, &pancreas, Some(&lesions), &model, &cfg, 8).unwrap();
        assert_eq!(r.provenance.tumors_placed, 1);
        assert!(r.provenance.count_reduced);
        assert_eq!(r.provenance.tumors_requested, 2);
        assert!(d2(r.provenance.tumors[0].center_voxel) <= 4);

        // with every center blocked nothing can be placed at all
        let blocked = Mask::from_fn(g, |_| true);
        let err = synthesize_with_seed(&v, &pancreas, Some(&blocked), &model, &cfg, 8).unwrap_err();
        assert!(matches!(err, Error::PlacementFailed(_)));

        // allow_overlap ignores both
        let cfg = SynthesisConfig {
            allow_overlap: true,
            ..cfg
        };
        let r = synthesize_with_seed(&v, &pancreas, Some(&blocked), &model, &cfg, 8).unwrap();
        assert_eq!(r.provenance.tumors_placed, 2);
    }

    #[test]
    fn empty_pancreas_is_rejected() {
        let ph = phantom(&PhantomSpec::small());
        let p = Mask::zeros(*ph.volume.geometry());
        let r = synthesize_tumor(&ph.volume, &p, &ph.model(), &SynthesisConfig::default());
        assert!(matches!(r, Err(Error::EmptyMask("pancreas"))));
    }
}
