use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Connectivity;
use crate::error::{Error, Result};
use crate::synth::sphere_radius;
use crate::volgrid::{Mask, Volume};

/// One connected component of a label mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    /// Linear voxel indices, ascending.
    #[serde(skip)]
    pub voxels: Vec<usize>,
    pub score: f64,
    pub volume_mm3: f64,
    pub equivalent_radius_mm: f64,
    /// Mean voxel coordinate.
    pub centroid: [f64; 3],
}

impl Instance {
    pub fn new(mut voxels: Vec<usize>, score: f64, mask: &Mask) -> Self {
        voxels.sort_unstable();
        let g = mask.geometry();
        let volume_mm3 = voxels.len() as f64 * g.voxel_volume();
        let mut sum = [0.0; 3];
        for &i in &voxels {
            let c = g.coords(i);
            for a in 0..3 {
                sum[a] += c[a] as f64;
            }
        }
        let n = voxels.len().max(1) as f64;
        Instance {
            score,
            volume_mm3,
            equivalent_radius_mm: sphere_radius(volume_mm3),
            centroid: sum.map(|s| s / n),
            voxels,
        }
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    /// Voxels shared with `other` (both lists are sorted).
    pub fn overlap(&self, other: &Instance) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.voxels.len() && j < other.voxels.len() {
            match self.voxels[i].cmp(&other.voxels[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Connected components of all positive voxels, in order of each
/// component's first voxel in raster order. The score of a component is the
/// maximum of `score_map` over it, or 1.0 without a score map.
pub fn extract_instances(mask: &Mask, score_map: Option<&Volume>, connectivity: Connectivity) -> Result<Vec<Instance>> {
    let g = *mask.geometry();
    if let Some(s) = score_map {
        g.ensure_same(s.geometry(), "score map vs mask")?;
        if let Some(v) = s.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter(format!("score map value {v} outside [0, 1]")));
        }
    }
    let offsets = connectivity.offsets();
    let mut seen = vec![false; g.len()];
    let mut queue = VecDeque::new();
    let mut out = Vec::new();
    for start in 0..g.len() {
        if seen[start] || !mask.is_set(start) {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut voxels = Vec::new();
        while let Some(i) = queue.pop_front() {
            voxels.push(i);
            let c = g.coords(i);
            for o in &offsets {
                let p = [c[0] as i64 + o[0], c[1] as i64 + o[1], c[2] as i64 + o[2]];
                if let Some(j) = g.checked_index(p) {
                    if !seen[j] && mask.is_set(j) {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        let score = match score_map {
            Some(s) => voxels.iter().map(|&i| s.values()[i] as f64).fold(0.0, f64::max),
            None => 1.0,
        };
        out.push(Instance::new(voxels, score, mask));
    }
    Ok(out)
}
