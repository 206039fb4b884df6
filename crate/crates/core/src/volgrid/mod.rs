//! Volumetric raster model shared by every other module: CT volumes in
//! Hounsfield Units, integer label masks, NIfTI-1 I/O and slice rendering.
//!
//! Voxels are stored x-fastest (`index = x + nx * (y + ny * z)`), matching
//! the NIfTI on-disk order. Inputs are assumed to be canonically oriented;
//! only axis-aligned spacing and the origin translation are honored.

mod nifti;
mod render;

pub use nifti::{read_mask, read_volume, write_mask, write_volume};
pub use render::{render_slice, render_slice_with_overlay, Axis, Image2D, WindowSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid shape and placement. Spacing and origin are kept at `f32` precision
/// so that they survive a trip through a NIfTI header unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidVolume(format!("all dims must be >= 1, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::InvalidVolume(format!(
                "spacing must be finite and positive, got {spacing:?}"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidVolume(format!("origin must be finite, got {origin:?}")));
        }
        Ok(Geometry {
            dims,
            spacing: spacing.map(|s| s as f32 as f64),
            origin: origin.map(|o| o as f32 as f64),
        })
    }

    /// Unit spacing, zero origin.
    pub fn isotropic(dims: [usize; 3], spacing: f64) -> Result<Self> {
        Geometry::new(dims, [spacing; 3], [0.0; 3])
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    /// Index of a signed coordinate, or `None` when it falls outside the grid.
    #[inline]
    pub fn checked_index(&self, p: [i64; 3]) -> Option<usize> {
        if p.iter().zip(self.dims).any(|(&c, d)| c < 0 || c as usize >= d) {
            return None;
        }
        Some(self.index(p[0] as usize, p[1] as usize, p[2] as usize))
    }

    pub fn ensure_same(&self, other: &Geometry, what: &str) -> Result<()> {
        if self.dims != other.dims || self.spacing != other.spacing {
            return Err(Error::GeometryMismatch(format!(
                "{what}: dims {:?} spacing {:?} vs dims {:?} spacing {:?}",
                self.dims, self.spacing, other.dims, other.spacing
            )));
        }
        Ok(())
    }
}

/// A CT volume in Hounsfield Units.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    geometry: Geometry,
    values: Vec<f32>,
}

impl Volume {
    pub fn new(geometry: Geometry, values: Vec<f32>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::InvalidVolume(format!(
                "buffer holds {} values, geometry needs {}",
                values.len(),
                geometry.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidVolume(format!("non-finite value at voxel {i}")));
        }
        Ok(Volume { geometry, values })
    }

    pub fn filled(geometry: Geometry, value: f32) -> Self {
        assert!(value.is_finite());
        Volume {
            values: vec![value; geometry.len()],
            geometry,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Mutable access for in-crate writers; callers must keep values finite.
    pub(crate) fn values_mut(&mut self) -> &mut [f32] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.values[self.geometry.index(x, y, z)]
    }
}

/// Integer label grid; zero is background.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    geometry: Geometry,
    labels: Vec<u16>,
}

impl Mask {
    pub fn new(geometry: Geometry, labels: Vec<u16>) -> Result<Self> {
        if labels.len() != geometry.len() {
            return Err(Error::InvalidVolume(format!(
                "label buffer holds {} values, geometry needs {}",
                labels.len(),
                geometry.len()
            )));
        }
        Ok(Mask { geometry, labels })
    }

    pub fn zeros(geometry: Geometry) -> Self {
        Mask {
            labels: vec![0; geometry.len()],
            geometry,
        }
    }

    /// Binary mask from a per-voxel predicate over coordinates.
    pub fn from_fn(geometry: Geometry, mut f: impl FnMut([usize; 3]) -> bool) -> Self {
        let labels = (0..geometry.len()).map(|i| u16::from(f(geometry.coords(i)))).collect();
        Mask { geometry, labels }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub(crate) fn labels_mut(&mut self) -> &mut [u16] {
        &mut self.labels
    }

    #[inline]
    pub fn is_set(&self, index: usize) -> bool {
        self.labels[index] != 0
    }

    pub fn count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }

    pub fn is_blank(&self) -> bool {
        self.labels.iter().all(|&l| l == 0)
    }

    /// Linear indices of all labeled voxels, ascending.
    pub fn positive_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l != 0).then_some(i))
            .collect()
    }

    /// Binary mask of voxels carrying exactly `label`.
    pub fn select(&self, label: u16) -> Mask {
        Mask {
            geometry: self.geometry,
            labels: self.labels.iter().map(|&l| u16::from(l == label)).collect(),
        }
    }

    /// Mean voxel coordinate of labeled voxels, in voxel units.
    pub fn centroid(&self) -> Option<[f64; 3]> {
        let mut sum = [0.0f64; 3];
        let mut n = 0usize;
        for (i, &l) in self.labels.iter().enumerate() {
            if l != 0 {
                let c = self.geometry.coords(i);
                for a in 0..3 {
                    sum[a] += c[a] as f64;
                }
                n += 1;
            }
        }
        (n > 0).then(|| sum.map(|s| s / n as f64))
    }

    /// Inclusive (min, max) voxel index of labeled voxels along `axis`.
    pub fn extent(&self, axis: usize) -> Option<(usize, usize)> {
        let mut lo = usize::MAX;
        let mut hi = 0;
        for (i, &l) in self.labels.iter().enumerate() {
            if l != 0 {
                let c = self.geometry.coords(i)[axis];
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        (lo != usize::MAX).then_some((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_coords_roundtrip() {
        let g = Geometry::isotropic([3, 4, 5], 1.0).unwrap();
        for i in 0..g.len() {
            let [x, y, z] = g.coords(i);
            assert_eq!(g.index(x, y, z), i);
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Geometry::new([0, 1, 1], [1.0; 3], [0.0; 3]).is_err());
        assert!(Geometry::new([1, 1, 1], [1.0, 0.0, 1.0], [0.0; 3]).is_err());
        assert!(Geometry::new([1, 1, 1], [1.0, f64::NAN, 1.0], [0.0; 3]).is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = Geometry::isotropic([2, 1, 1], 1.0).unwrap();
        assert!(Volume::new(g, vec![0.0, f32::INFINITY]).is_err());
        assert!(Volume::new(g, vec![0.0]).is_err());
    }

    #[test]
    fn mismatched_geometry_is_reported() {
        let a = Geometry::isotropic([2, 2, 2], 1.0).unwrap();
        let b = Geometry::isotropic([2, 2, 2], 2.0).unwrap();
        assert!(matches!(a.ensure_same(&b, "pair"), Err(Error::GeometryMismatch(_))));
    }

    #[test]
    fn centroid_and_extent() {
        let g = Geometry::isotropic([4, 4, 4], 1.0).unwrap();
        let m = Mask::from_fn(g, |[x, y, z]| x == 1 && y == 2 && (z == 0 || z == 2));
        assert_eq!(m.centroid(), Some([1.0, 2.0, 1.0]));
        assert_eq!(m.extent(2), Some((0, 2)));
        assert_eq!(m.count(), 2);
    }
}
