//! Brute-force reference implementations used as test oracles.
//!
//! Everything here works on plain index sets with direct set arithmetic and
//! exhaustive threshold enumeration, sharing no code with the library.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Connected components of `labels > 0` by union-find over forward
/// neighbours, ordered by smallest voxel index. Each component is sorted.
pub fn components(labels: &[u16], dims: [usize; 3], corners: bool) -> Vec<Vec<usize>> {
    let [nx, ny, nz] = dims;
    let mut parent: Vec<usize> = (0..labels.len()).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * (y + ny * z);
                if labels[i] == 0 {
                    continue;
                }
                for dz in -1i64..=1 {
                    for dy in -1i64..=1 {
                        for dx in -1i64..=1 {
                            let taxi = dx.abs() + dy.abs() + dz.abs();
                            if taxi == 0 || (!corners && taxi > 1) {
                                continue;
                            }
                            let (qx, qy, qz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                            if qx < 0 || qy < 0 || qz < 0 || qx >= nx as i64 || qy >= ny as i64 || qz >= nz as i64 {
                                continue;
                            }
                            let j = qx as usize + nx * (qy as usize + ny * qz as usize);
                            if labels[j] > 0 {
                                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                                parent[a.max(b)] = a.min(b);
                            }
                        }
                    }
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..labels.len() {
        if labels[i] > 0 {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}

pub fn dice(a: &[u16], b: &[u16]) -> f64 {
    let pa: HashSet<usize> = (0..a.len()).filter(|&i| a[i] > 0).collect();
    let pb: HashSet<usize> = (0..b.len()).filter(|&i| b[i] > 0).collect();
    if pa.is_empty() && pb.is_empty() {
        return 1.0;
    }
    2.0 * pa.intersection(&pb).count() as f64 / (pa.len() + pb.len()) as f64
}

pub fn equivalent_radius(voxels: usize, voxel_volume: f64) -> f64 {
    (voxels as f64 * voxel_volume * 3.0 / (4.0 * PI)).powf(1.0 / 3.0)
}

#[derive(Debug, Clone)]
pub struct OracleCase {
    pub gt: Vec<BTreeSet<usize>>,
    pub gt_radius: Vec<f64>,
    pub pred: Vec<(BTreeSet<usize>, f64)>,
}

impl OracleCase {
    /// GT credited to a prediction: largest intersection, first on ties.
    fn credit(&self, p: &BTreeSet<usize>) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for (gi, g) in self.gt.iter().enumerate() {
            let n = p.intersection(g).count();
            if n > 0 && best.is_none_or(|(_, b)| n > b) {
                best = Some((gi, n));
            }
        }
        best.map(|b| b.0)
    }

    /// (detected flags per GT, false positives) keeping scores >= t.
    pub fn at(&self, t: f64) -> (Vec<bool>, usize) {
        let mut hit = vec![false; self.gt.len()];
        let mut fp = 0;
        for (p, s) in &self.pred {
            if *s < t {
                continue;
            }
            match self.credit(p) {
                Some(g) => hit[g] = true,
                None => fp += 1,
            }
        }
        (hit, fp)
    }
}

fn thresholds(cases: &[OracleCase]) -> Vec<f64> {
    let mut t: Vec<f64> = cases.iter().flat_map(|c| c.pred.iter().map(|p| p.1)).collect();
    t.sort_by(|a, b| b.partial_cmp(a).unwrap());
    t.dedup();
    t
}

/// (threshold, fp per subject, sensitivity) at every distinct score, highest first.
pub fn froc_points(cases: &[OracleCase]) -> Vec<(f64, f64, f64)> {
    let n_gt: usize = cases.iter().map(|c| c.gt.len()).sum();
    thresholds(cases)
        .into_iter()
        .map(|t| {
            let (mut det, mut fp) = (0, 0);
            for c in cases {
                let (h, f) = c.at(t);
                det += h.iter().filter(|&&x| x).count();
                fp += f;
            }
            (t, fp as f64 / cases.len() as f64, det as f64 / n_gt as f64)
        })
        .collect()
}

/// Best sensitivity over all thresholds whose FP rate is within the target.
pub fn froc_at(cases: &[OracleCase], target: f64) -> f64 {
    froc_points(cases)
        .into_iter()
        .filter(|p| p.1 <= target)
        .map(|p| p.2)
        .fold(0.0, f64::max)
}

/// Lowest score threshold whose FP rate is within the target.
pub fn chosen_threshold(cases: &[OracleCase], target: f64) -> Option<f64> {
    froc_points(cases).into_iter().rfind(|p| p.1 <= target).map(|p| p.0)
}

/// (n_gt, detected) per radius bin with ascending lower `edges`.
pub fn stratified(cases: &[OracleCase], edges: &[f64], target: f64) -> Vec<(usize, usize)> {
    let t = chosen_threshold(cases, target);
    let mut out = vec![(0, 0); edges.len()];
    for c in cases {
        let hit = match t {
            Some(t) => c.at(t).0,
            None => vec![false; c.gt.len()],
        };
        for (g, h) in hit.iter().enumerate() {
            let r = c.gt_radius[g];
            if let Some(k) = (0..edges.len()).rev().find(|&k| r >= edges[k]) {
                out[k].0 += 1;
                out[k].1 += *h as usize;
            }
        }
    }
    out
}

/// Mann-Whitney AUC over all positive/negative pairs, ties counted half.
pub fn auc(labels: &[bool], scores: &[f64]) -> f64 {
    let (mut twice, mut pairs) = (0usize, 0usize);
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] && !labels[j] {
                pairs += 1;
                twice += if scores[i] > scores[j] {
                    2
                } else if scores[i] == scores[j] {
                    1
                } else {
                    0
                };
            }
        }
    }
    twice as f64 / (2 * pairs) as f64
}

/// Random subject: labels of GT and prediction plus a score map, on a grid
/// of at most 32^3 voxels.
pub struct RandomSubject {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub gt: Vec<u16>,
    pub pred: Vec<u16>,
    pub score: Vec<f32>,
}

fn paint_ball(labels: &mut [u16], dims: [usize; 3], c: [i64; 3], r: i64, value: u16, score: Option<(&mut [f32], f32)>) {
    let mut score = score;
    for z in c[2] - r..=c[2] + r {
        for y in c[1] - r..=c[1] + r {
            for x in c[0] - r..=c[0] + r {
                if x < 0 || y < 0 || z < 0 || x >= dims[0] as i64 || y >= dims[1] as i64 || z >= dims[2] as i64 {
                    continue;
                }
                let d = (x - c[0]).pow(2) + (y - c[1]).pow(2) + (z - c[2]).pow(2);
                if d <= r * r {
                    let i = x as usize + dims[0] * (y as usize + dims[1] * z as usize);
                    labels[i] = value;
                    if let Some((s, v)) = score.as_mut() {
                        s[i] = s[i].max(*v);
                    }
                }
            }
        }
    }
}

pub fn random_subject(rng: &mut ChaCha8Rng) -> RandomSubject {
    let dims = [
        rng.random_range(6..=32),
        rng.random_range(6..=32),
        rng.random_range(4..=32),
    ];
    let choices = [0.5, 1.0, 2.0, 4.0, 6.0];
    let spacing = [0, 1, 2].map(|_| choices[rng.random_range(0..choices.len())]);
    let n = dims[0] * dims[1] * dims[2];
    let mut gt = vec![0u16; n];
    let mut pred = vec![0u16; n];
    let mut score = vec![0f32; n];
    let center = |rng: &mut ChaCha8Rng| [0, 1, 2].map(|a| rng.random_range(0..dims[a] as i64));
    for _ in 0..rng.random_range(0..=4) {
        let c = center(rng);
        let r = rng.random_range(0..=6);
        paint_ball(&mut gt, dims, c, r, rng.random_range(1..=3), None);
        if rng.random_bool(0.7) {
            let jitter = c.map(|v| v + rng.random_range(-2..=2));
            let s = rng.random_range(1..=10) as f32 / 10.0;
            paint_ball(
                &mut pred,
                dims,
                jitter,
                rng.random_range(0..=3),
                1,
                Some((&mut score, s)),
            );
        }
    }
    for _ in 0..rng.random_range(0..=3) {
        let c = center(rng);
        let s = rng.random_range(1..=10) as f32 / 10.0;
        paint_ball(&mut pred, dims, c, rng.random_range(0..=2), 1, Some((&mut score, s)));
    }
    RandomSubject {
        dims,
        spacing,
        gt,
        pred,
        score,
    }
}

impl RandomSubject {
    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn oracle(&self) -> OracleCase {
        let gt: Vec<BTreeSet<usize>> = components(&self.gt, self.dims, true)
            .into_iter()
            .map(|c| c.into_iter().collect())
            .collect();
        let gt_radius = gt
            .iter()
            .map(|g| equivalent_radius(g.len(), self.voxel_volume()))
            .collect();
        let pred = components(&self.pred, self.dims, true)
            .into_iter()
            .map(|c| {
                let s = c.iter().map(|&i| self.score[i] as f64).fold(0.0, f64::max);
                (c.into_iter().collect(), s)
            })
            .collect();
        OracleCase { gt, gt_radius, pred }
    }
}
