use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::lower_median;
use crate::volgrid::{Mask, Volume};

/// Sampling radius used when none is configured.
pub const DEFAULT_NEIGHBORHOOD_RADIUS_MM: f64 = 15.0;

/// Measurements of one annotated tumor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseStats {
    /// Tumor volume over pancreas volume.
    pub size_ratio: f64,
    /// Median HU of pancreas tissue around the tumor (`m`).
    pub neighborhood_median: f64,
    pub tumor_median: f64,
    /// `neighborhood_median - tumor_median`; positive for hypodense lesions.
    pub intensity_residual: f64,
    /// Tumor z-center relative to the pancreas z-center, in units of half
    /// the pancreas z-extent, clamped to [-1, 1].
    pub offset_z: f64,
}

/// HU values of pancreas voxels within `radius_mm` of `center` (voxel
/// coordinates, may be fractional) for which `excluded` is false.
pub(crate) fn neighborhood_values(
    volume: &Volume,
    pancreas: &Mask,
    center: [f64; 3],
    radius_mm: f64,
    excluded: impl Fn(usize) -> bool,
) -> Vec<f64> {
    let g = volume.geometry();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        let reach = radius_mm / g.spacing[a];
        let l = (center[a] - reach).ceil().max(0.0);
        let h = (center[a] + reach).floor().min(g.dims[a] as f64 - 1.0);
        if h < l {
            return Vec::new();
        }
        lo[a] = l as usize;
        hi[a] = h as usize;
    }
    let r2 = radius_mm * radius_mm;
    let mut out = Vec::new();
    for z in lo[2]..=hi[2] {
        let dz = (z as f64 - center[2]) * g.spacing[2];
        for y in lo[1]..=hi[1] {
            let dy = (y as f64 - center[1]) * g.spacing[1];
            for x in lo[0]..=hi[0] {
                let dx = (x as f64 - center[0]) * g.spacing[0];
                if dx * dx + dy * dy + dz * dz > r2 {
                    continue;
                }
                let i = g.index(x, y, z);
                if pancreas.is_set(i) && !excluded(i) {
                    out.push(volume.values()[i] as f64);
                }
            }
        }
    }
    out
}

pub fn compute_case_stats(volume: &Volume, pancreas: &Mask, tumor: &Mask, radius_mm: f64) -> Result<CaseStats> {
    let g = volume.geometry();
    g.ensure_same(pancreas.geometry(), "pancreas mask vs volume")?;
    g.ensure_same(tumor.geometry(), "tumor mask vs volume")?;
    if !(radius_mm.is_finite() && radius_mm > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be > 0, got {radius_mm}")));
    }
    let pancreas_count = pancreas.count();
    if pancreas_count == 0 {
        return Err(Error::EmptyMask("pancreas"));
    }
    let mut tumor_values: Vec<f64> = tumor
        .positive_indices()
        .into_iter()
        .map(|i| volume.values()[i] as f64)
        .collect();
    if tumor_values.is_empty() {
        return Err(Error::EmptyMask("tumor"));
    }
    let vv = g.voxel_volume();
    let size_ratio = (tumor_values.len() as f64 * vv) / (pancreas_count as f64 * vv);

    let tumor_center = tumor.centroid().expect("non-empty");
    let mut near = neighborhood_values(volume, pancreas, tumor_center, radius_mm, |i| tumor.is_set(i));
    let neighborhood_median = lower_median(&mut near).ok_or_else(|| {
        Error::NeighborhoodTooSmall(format!(
            "no pancreas voxels within {radius_mm} mm of the tumor centroid; increase the radius"
        ))
    })?;
    let tumor_median = lower_median(&mut tumor_values).expect("non-empty");

    let pancreas_center = pancreas.centroid().expect("non-empty");
    let (zlo, zhi) = pancreas.extent(2).expect("non-empty");
    let half_extent = (zhi - zlo + 1) as f64 / 2.0;
    let offset_z = ((tumor_center[2] - pancreas_center[2]) / half_extent).clamp(-1.0, 1.0);

    Ok(CaseStats {
        size_ratio,
        neighborhood_median,
        tumor_median,
        intensity_residual: neighborhood_median - tumor_median,
        offset_z,
    })
}
