//! Tumor footprints on small local grids: ellipsoid rasterization and
//! elastic deformation.

use rand::Rng;
use rand_distr::StandardNormal;

use super::SynthesisConfig;
use crate::filter::gaussian_blur_3d;

/// Binary footprint on its own grid. `center` is the local voxel that is
/// placed on the chosen tumor center in the target volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalMask {
    pub dims: [usize; 3],
    pub center: [usize; 3],
    pub data: Vec<bool>,
}

impl LocalMask {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, p: [usize; 3]) -> usize {
        p[0] + self.dims[0] * (p[1] + self.dims[1] * p[2])
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    pub fn get(&self, p: [i64; 3]) -> bool {
        if (0..3).any(|a| p[a] < 0 || p[a] as usize >= self.dims[a]) {
            return false;
        }
        self.data[self.index([p[0] as usize, p[1] as usize, p[2] as usize])]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Offsets of set voxels relative to `center`, in raster order.
    pub fn offsets(&self) -> impl Iterator<Item = [i64; 3]> + '_ {
        self.data.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| {
            let c = self.coords(i);
            std::array::from_fn(|a| c[a] as i64 - self.center[a] as i64)
        })
    }
}

/// Voxels whose centers satisfy `sum(((i - c) * s / axis)^2) <= 1`, on a
/// grid spanning the ellipsoid plus a one-voxel margin. An ellipsoid smaller
/// than a voxel yields just the center voxel.
pub fn rasterize_ellipsoid(semi_axes: [f64; 3], spacing: [f64; 3]) -> LocalMask {
    let half: [usize; 3] = std::array::from_fn(|a| (semi_axes[a] / spacing[a]).floor() as usize + 1);
    let dims = half.map(|h| 2 * h + 1);
    let mut data = vec![false; dims[0] * dims[1] * dims[2]];
    let mut i = 0;
    for z in 0..dims[2] {
        let dz = (z as f64 - half[2] as f64) * spacing[2] / semi_axes[2];
        for y in 0..dims[1] {
            let dy = (y as f64 - half[1] as f64) * spacing[1] / semi_axes[1];
            for x in 0..dims[0] {
                let dx = (x as f64 - half[0] as f64) * spacing[0] / semi_axes[0];
                data[i] = dx * dx + dy * dy + dz * dz <= 1.0;
                i += 1;
            }
        }
    }
    LocalMask {
        dims,
        center: half,
        data,
    }
}

/// Warps `mask` by a smoothed random displacement field.
///
/// Each displacement component starts as white noise on the (padded) grid,
/// is smoothed with `elastic_sigma_mm`, and the field is scaled so its
/// largest vector has length `elastic_magnitude_mm`. Output voxels pull
/// their value from the nearest input voxel at `p + d(p)`.
pub fn elastic_deform<R: Rng + ?Sized>(
    mask: &LocalMask,
    spacing: [f64; 3],
    cfg: &SynthesisConfig,
    rng: &mut R,
) -> LocalMask {
    let magnitude = cfg.elastic_magnitude_mm;
    if magnitude <= 0.0 {
        return mask.clone();
    }
    let pad: [usize; 3] = std::array::from_fn(|a| (magnitude / spacing[a]).ceil() as usize);
    let dims: [usize; 3] = std::array::from_fn(|a| mask.dims[a] + 2 * pad[a]);
    let n = dims[0] * dims[1] * dims[2];
    let sigma_vox: [f64; 3] = std::array::from_fn(|a| cfg.elastic_sigma_mm / spacing[a]);

    let mut field: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::new());
    for comp in field.iter_mut() {
        *comp = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        gaussian_blur_3d(comp, dims, sigma_vox);
    }
    let max_norm = (0..n)
        .map(|i| (field[0][i].powi(2) + field[1][i].powi(2) + field[2][i].powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    if !(max_norm > 0.0) {
        return mask.clone();
    }
    let scale = magnitude / max_norm;

    let mut out = LocalMask {
        dims,
        center: std::array::from_fn(|a| mask.center[a] + pad[a]),
        data: vec![false; n],
    };
    for i in 0..n {
        let p = out.coords(i);
        let src: [i64; 3] = std::array::from_fn(|a| {
            let shift = field[a][i] * scale / spacing[a];
            (p[a] as f64 + shift).round() as i64 - pad[a] as i64
        });
        out.data[i] = mask.get(src);
    }
    if out.count() == 0 {
        return mask.clone();
    }
    out
}
