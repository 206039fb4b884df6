use serde::{Deserialize, Serialize};

use super::froc::froc_with_unit;
use super::matching::CaseEval;
use super::SensitivityUnit;
use crate::error::{Error, Result};

/// Tumors with an equivalent radius below this are "small".
pub const SMALL_TUMOR_RADIUS_MM: f64 = 20.0;

/// Bin edges giving the bins [0, 20) and [20, inf).
pub const DEFAULT_RADIUS_EDGES_MM: [f64; 2] = [0.0, SMALL_TUMOR_RADIUS_MM];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSensitivity {
    pub lo_mm: f64,
    /// `None` for the open last bin.
    pub hi_mm: Option<f64>,
    pub n_gt: usize,
    pub detected: usize,
    /// `None` when the bin has no ground truth.
    pub sensitivity: Option<f64>,
}

/// Per-bin sensitivity at the threshold FROC selects for `fp_target`.
///
/// `edges` are ascending lower bounds; bin `k` is `[edges[k], edges[k+1])`
/// and the last bin is open. GT below the first edge is not counted.
pub fn stratified_sensitivity(cases: &[CaseEval], edges: &[f64], fp_target: f64) -> Result<Vec<BinSensitivity>> {
    if edges.is_empty() || edges.windows(2).any(|w| !(w[0] < w[1])) || edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter(
            "radius bin edges must be finite and strictly ascending".into(),
        ));
    }
    let curve = froc_with_unit(cases, &[fp_target], SensitivityUnit::PerTumor)?;
    let threshold = curve.targets[0].threshold;
    let mut bins: Vec<BinSensitivity> = edges
        .iter()
        .enumerate()
        .map(|(k, &lo)| BinSensitivity {
            lo_mm: lo,
            hi_mm: edges.get(k + 1).copied(),
            n_gt: 0,
            detected: 0,
            sensitivity: None,
        })
        .collect();
    for case in cases {
        let hit = match threshold {
            Some(t) => case.detected_at(t),
            None => vec![false; case.gt.len()],
        };
        for (g, h) in case.gt.iter().zip(hit) {
            let r = g.equivalent_radius_mm;
            if let Some(b) = bins.iter_mut().rev().find(|b| r >= b.lo_mm) {
                b.n_gt += 1;
                b.detected += h as usize;
            }
        }
    }
    for b in &mut bins {
        if b.n_gt > 0 {
            b.sensitivity = Some(b.detected as f64 / b.n_gt as f64);
        }
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect_eval::{HitCriterion, Instance};
    use crate::volgrid::{Geometry, Mask};

    /// Instance whose equivalent radius is exactly `r` mm: voxel volume
    /// chosen so a single voxel has volume 4/3·π·r³.
    fn sized(offset: usize, r: f64, score: f64) -> Instance {
        let mut inst = Instance::new(
            vec![offset],
            score,
            &Mask::zeros(Geometry::isotropic([64, 1, 1], 1.0).unwrap()),
        );
        inst.equivalent_radius_mm = r;
        inst
    }

    #[test]
    fn single_bin_equals_overall() {
        let cases = vec![CaseEval::new(
            vec![sized(1, 5.0, 0.9), sized(40, 1.0, 0.8)],
            vec![sized(1, 5.0, 1.0), sized(3, 7.0, 1.0)],
            HitCriterion::Overlap,
        )
        .unwrap()];
        let bins = stratified_sensitivity(&cases, &[0.0], 1.0).unwrap();
        assert_eq!(bins[0].sensitivity, Some(0.5));
        assert_eq!(bins[0].hi_mm, None);
    }

    #[test]
    fn three_bins_hand_count() {
        // radii 4, 8 (bin 0-10), 12, 15, 18 (bin 10-20), 25 (>= 20)
        // at 0.5 FP/subject over two subjects one FP is allowed, so the
        // threshold stops at 0.4 and the 0.3 hit on radius 8 is cut
        let gt = vec![
            sized(1, 4.0, 1.0),
            sized(3, 8.0, 1.0),
            sized(5, 12.0, 1.0),
            sized(7, 15.0, 1.0),
            sized(9, 18.0, 1.0),
            sized(11, 25.0, 1.0),
        ];
        let pred = vec![
            sized(1, 4.0, 0.9),
            sized(5, 12.0, 0.7),
            sized(7, 15.0, 0.6),
            sized(11, 25.0, 0.5),
            sized(30, 1.0, 0.4),
            sized(31, 1.0, 0.35),
            sized(3, 8.0, 0.3),
        ];
        let cases = vec![
            CaseEval::new(pred, gt, HitCriterion::Overlap).unwrap(),
            CaseEval::new(vec![], vec![], HitCriterion::Overlap).unwrap(),
        ];
        let bins = stratified_sensitivity(&cases, &[0.0, 10.0, 20.0], 0.5).unwrap();
        let got: Vec<_> = bins.iter().map(|b| (b.n_gt, b.detected)).collect();
        assert_eq!(got, vec![(2, 1), (3, 2), (1, 1)]);
        assert_eq!(bins[2].sensitivity, Some(1.0));
    }

    #[test]
    fn empty_bin_is_undefined() {
        let cases = vec![CaseEval::new(
            vec![sized(1, 5.0, 0.9)],
            vec![sized(1, 5.0, 1.0)],
            HitCriterion::Overlap,
        )
        .unwrap()];
        let bins = stratified_sensitivity(&cases, &DEFAULT_RADIUS_EDGES_MM, 1.0).unwrap();
        assert_eq!(bins[0].sensitivity, Some(1.0));
        assert_eq!(bins[1].sensitivity, None);
        assert_eq!(bins[1].n_gt, 0);
    }

    #[test]
    fn bad_edges() {
        let cases = vec![CaseEval::new(vec![], vec![sized(1, 5.0, 1.0)], HitCriterion::Overlap).unwrap()];
        assert!(stratified_sensitivity(&cases, &[10.0, 5.0], 1.0).is_err());
        assert!(stratified_sensitivity(&cases, &[], 1.0).is_err());
    }
}
