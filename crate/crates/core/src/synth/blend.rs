use std::collections::VecDeque;

use super::shape::LocalMask;
use super::texture::TextureField;
use super::SynthesisConfig;
use crate::error::{Error, Result};
use crate::filter::{gaussian_blur_3d, kernel_radius};
use crate::volgrid::{Mask, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlendOutcome {
    /// Footprint voxels that landed inside the volume.
    pub footprint_voxels: usize,
    /// Voxels newly labeled in the output mask.
    pub labeled_voxels: usize,
    /// Voxels whose HU changed (blend weight > 0).
    pub touched_voxels: usize,
}

/// Blends one textured footprint into `volume` and labels its core in `mask`.
///
/// The weight field is the footprint indicator blurred with a spacing-aware
/// Gaussian (truncated at 3 sigma) and rescaled to a maximum of 1. Texture is
/// extended outward to the blurred support by copying the nearest footprint
/// voxel (26-neighbour breadth-first order). Voxels with `w >= core_threshold`
/// that are still unlabeled receive `label`.
pub fn blend_into(
    volume: &mut Volume,
    mask: &mut Mask,
    label: u16,
    center: [usize; 3],
    tumor: &LocalMask,
    texture: &TextureField,
    cfg: &SynthesisConfig,
) -> Result<BlendOutcome> {
    let g = *volume.geometry();
    g.ensure_same(mask.geometry(), "output mask vs volume")?;

    // footprint in global coordinates, clipped to the volume
    let mut footprint = Vec::new();
    for (li, (&inside, value)) in tumor.data.iter().zip(&texture.values).enumerate() {
        if !inside {
            continue;
        }
        let lc = tumor.coords(li);
        let p: [i64; 3] = std::array::from_fn(|a| center[a] as i64 + lc[a] as i64 - tumor.center[a] as i64);
        if g.checked_index(p).is_some() {
            footprint.push((p.map(|v| v as usize), value.expect("texture covers footprint")));
        }
    }
    if footprint.is_empty() {
        return Err(Error::TumorOutsideVolume);
    }

    let sigma_vox: [f64; 3] = std::array::from_fn(|a| cfg.blur_sigma_mm / g.spacing[a]);
    let reach: [usize; 3] = sigma_vox.map(kernel_radius);
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for (p, _) in &footprint {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    for a in 0..3 {
        lo[a] = lo[a].saturating_sub(reach[a]);
        hi[a] = (hi[a] + reach[a]).min(g.dims[a] - 1);
    }
    let bd: [usize; 3] = std::array::from_fn(|a| hi[a] - lo[a] + 1);
    let bn = bd[0] * bd[1] * bd[2];
    let bidx = |p: [usize; 3]| (p[0] - lo[0]) + bd[0] * ((p[1] - lo[1]) + bd[1] * (p[2] - lo[2]));

    let mut weight = vec![0.0f64; bn];
    let mut tex: Vec<Option<f64>> = vec![None; bn];
    let mut queue = VecDeque::with_capacity(bn);
    for (p, value) in &footprint {
        let i = bidx(*p);
        weight[i] = 1.0;
        tex[i] = Some(*value);
        queue.push_back(i);
    }
    gaussian_blur_3d(&mut weight, bd, sigma_vox);
    let peak = weight.iter().copied().fold(0.0f64, f64::max);
    if peak > 0.0 && peak != 1.0 {
        weight.iter_mut().for_each(|w| *w /= peak);
    }

    // nearest-footprint texture extension over the box
    while let Some(i) = queue.pop_front() {
        let value = tex[i];
        let c = [i % bd[0], (i / bd[0]) % bd[1], i / (bd[0] * bd[1])];
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let q = [c[0] as i64 + dx, c[1] as i64 + dy, c[2] as i64 + dz];
                    if (0..3).any(|a| q[a] < 0 || q[a] as usize >= bd[a]) {
                        continue;
                    }
                    let j = q[0] as usize + bd[0] * (q[1] as usize + bd[1] * q[2] as usize);
                    if tex[j].is_none() {
                        tex[j] = value;
                        queue.push_back(j);
                    }
                }
            }
        }
    }

    let mut outcome = BlendOutcome {
        footprint_voxels: footprint.len(),
        labeled_voxels: 0,
        touched_voxels: 0,
    };
    let values = volume.values_mut();
    let labels = mask.labels_mut();
    for z in 0..bd[2] {
        for y in 0..bd[1] {
            for x in 0..bd[0] {
                let bi = x + bd[0] * (y + bd[1] * z);
                let w = weight[bi];
                if w <= 0.0 {
                    continue;
                }
                let gi = g.index(lo[0] + x, lo[1] + y, lo[2] + z);
                let t = tex[bi].expect("box fully reached");
                values[gi] = ((1.0 - w) * values[gi] as f64 + w * t) as f32;
                outcome.touched_voxels += 1;
                if w >= cfg.core_threshold && labels[gi] == 0 {
                    labels[gi] = label;
                    outcome.labeled_voxels += 1;
                }
            }
        }
    }
    Ok(outcome)
}

/// Non-mutating form of [`blend_into`] for a single tumor; the returned mask
/// carries label 1.
pub fn blend(
    volume: &Volume,
    pancreas: &Mask,
    center: [usize; 3],
    tumor: &LocalMask,
    texture: &TextureField,
    cfg: &SynthesisConfig,
) -> Result<(Volume, Mask)> {
    volume
        .geometry()
        .ensure_same(pancreas.geometry(), "pancreas mask vs volume")?;
    let mut out = volume.clone();
    let mut mask = Mask::zeros(*volume.geometry());
    blend_into(&mut out, &mut mask, 1, center, tumor, texture, cfg)?;
    Ok((out, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::synth::shape::rasterize_ellipsoid;
    use crate::synth::texture::{covers, generate_texture};
    use crate::volgrid::Geometry;

    fn setup() -> (Volume, Mask, LocalMask, TextureField) {
        let g = Geometry::isotropic([24, 24, 24], 1.0).unwrap();
        let v = Volume::new(g, (0..g.len()).map(|i| (i % 97) as f32 - 40.0).collect()).unwrap();
        let p = Mask::from_fn(g, |_| true);
        let tumor = rasterize_ellipsoid([4.0, 3.0, 5.0], [1.0; 3]);
        let tex = generate_texture(&tumor, 90.0, 25.0, 4.0, &mut rng_from_seed(2));
        (v, p, tumor, tex)
    }

    #[test]
    fn no_blur_writes_texture_exactly() {
        let (v, p, tumor, tex) = setup();
        let cfg = SynthesisConfig {
            blur_sigma_mm: 0.0,
            ..SynthesisConfig::default()
        };
        let center = [12, 12, 12];
        let (out, mask) = blend(&v, &p, center, &tumor, &tex, &cfg).unwrap();
        let g = *v.geometry();
        for i in 0..g.len() {
            let inside = covers(&g, &tumor, center, i);
            assert_eq!(mask.is_set(i), inside);
            if inside {
                let c = g.coords(i);
                let l: [usize; 3] = std::array::from_fn(|a| c[a] + tumor.center[a] - center[a]);
                assert_eq!(out.values()[i], tex.values[tumor.index(l)].unwrap() as f32);
            } else {
                assert_eq!(out.values()[i].to_bits(), v.values()[i].to_bits());
            }
        }
    }

    #[test]
    fn blurred_weights_stay_local() {
        let (v, p, tumor, tex) = setup();
        let cfg = SynthesisConfig {
            blur_sigma_mm: 1.0,
            ..SynthesisConfig::default()
        };
        let center = [12, 12, 12];
        let (out, mask) = blend(&v, &p, center, &tumor, &tex, &cfg).unwrap();
        let g = *v.geometry();
        let mut changed = 0;
        for i in 0..g.len() {
            let c = g.coords(i);
            // beyond 3 sigma (3 voxels) of the footprint's bounding box nothing changes
            let far = (0..3).any(|a| {
                let lo = center[a] as i64 - tumor.center[a] as i64;
                let hi = lo + tumor.dims[a] as i64 - 1;
                (c[a] as i64) < lo - 3 || (c[a] as i64) > hi + 3
            });
            if far {
                assert_eq!(out.values()[i].to_bits(), v.values()[i].to_bits());
                assert!(!mask.is_set(i));
            }
            if out.values()[i] != v.values()[i] {
                changed += 1;
            }
        }
        assert!(changed > tumor.count());
        assert!(mask.count() > 0);
    }

    #[test]
    fn clipped_at_border() {
        let (v, p, tumor, tex) = setup();
        let cfg = SynthesisConfig::default();
        let (_, mask) = blend(&v, &p, [0, 0, 0], &tumor, &tex, &cfg).unwrap();
        assert!(mask.count() > 0 && mask.count() < tumor.count());
    }

    #[test]
    fn fully_outside_errors() {
        let (v, _, _, _) = setup();
        let tumor = LocalMask {
            dims: [3, 1, 1],
            center: [0, 0, 0],
            data: vec![false, false, true],
        };
        let tex = TextureField {
            mean: 0.0,
            values: vec![None, None, Some(1.0)],
        };
        let mut out = v.clone();
        let mut mask = Mask::zeros(*v.geometry());
        let r = blend_into(
            &mut out,
            &mut mask,
            1,
            [22, 0, 0],
            &tumor,
            &tex,
            &SynthesisConfig::default(),
        );
        assert!(matches!(r, Err(Error::TumorOutsideVolume)));
    }

    #[test]
    fn existing_labels_are_kept() {
        let (v, p, tumor, tex) = setup();
        let cfg = SynthesisConfig::default();
        let mut out = v.clone();
        let mut mask = Mask::zeros(*v.geometry());
        blend_into(&mut out, &mut mask, 1, [12, 12, 12], &tumor, &tex, &cfg).unwrap();
        let first = mask.count();
        blend_into(&mut out, &mut mask, 2, [12, 12, 14], &tumor, &tex, &cfg).unwrap();
        assert_eq!(mask.select(1).count(), first);
        assert!(mask.select(2).count() > 0);
        let _ = p;
    }
}
