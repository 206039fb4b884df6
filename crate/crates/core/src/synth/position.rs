use rand::Rng;

use crate::cohortstats::OffsetHistogram;
use crate::error::{Error, Result};
use crate::volgrid::Mask;

/// Pancreas voxels grouped by z-slice, plus the z-center and half extent
/// used to map normalized offsets onto slices.
#[derive(Debug, Clone)]
pub struct PancreasIndex {
    by_slice: Vec<Vec<usize>>,
    z_min: usize,
    z_center: f64,
    half_extent: f64,
    count: usize,
}

impl PancreasIndex {
    pub fn new(pancreas: &Mask) -> Result<Self> {
        let g = pancreas.geometry();
        let (z_min, z_max) = pancreas.extent(2).ok_or(Error::EmptyMask("pancreas"))?;
        let mut by_slice = vec![Vec::new(); z_max - z_min + 1];
        let mut z_sum = 0.0;
        let mut count = 0;
        for i in pancreas.positive_indices() {
            let z = g.coords(i)[2];
            by_slice[z - z_min].push(i);
            z_sum += z as f64;
            count += 1;
        }
        Ok(PancreasIndex {
            by_slice,
            z_min,
            z_center: z_sum / count as f64,
            half_extent: (z_max - z_min + 1) as f64 / 2.0,
            count,
        })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Voxel indices in slices whose z lies in `[lo, hi)` (or `[lo, hi]`
    /// when `closed`).
    fn slab(&self, lo: f64, hi: f64, closed: bool) -> impl Iterator<Item = &Vec<usize>> {
        self.by_slice.iter().enumerate().filter_map(move |(k, v)| {
            let z = (self.z_min + k) as f64;
            let inside = z >= lo && (z < hi || (closed && z <= hi));
            inside.then_some(v)
        })
    }

    /// Offset bin -> z-slab -> uniform voxel in the slab; uniform over the
    /// whole pancreas when the slab holds no pancreas voxels.
    pub fn sample<R: Rng + ?Sized>(&self, hist: &OffsetHistogram, rng: &mut R) -> usize {
        let bin = hist.sample_bin(rng);
        let (e0, e1) = hist.bin_range(bin);
        let lo = self.z_center + e0 * self.half_extent;
        let hi = self.z_center + e1 * self.half_extent;
        let closed = bin + 1 == hist.bins();
        let total: usize = self.slab(lo, hi, closed).map(Vec::len).sum();
        if total == 0 {
            let mut k = rng.random_range(0..self.count);
            for s in &self.by_slice {
                if k < s.len() {
                    return s[k];
                }
                k -= s.len();
            }
            unreachable!("k < count");
        }
        let mut k = rng.random_range(0..total);
        for s in self.slab(lo, hi, closed) {
            if k < s.len() {
                return s[k];
            }
            k -= s.len();
        }
        unreachable!("k < total")
    }
}

/// Tumor center voxel drawn from the offset histogram; always pancreas-labeled.
pub fn sample_position<R: Rng + ?Sized>(pancreas: &Mask, hist: &OffsetHistogram, rng: &mut R) -> Result<[usize; 3]> {
    let index = PancreasIndex::new(pancreas)?;
    let i = index.sample(hist, rng);
    Ok(pancreas.geometry().coords(i))
}
