use serde::{Deserialize, Serialize};

use super::instances::Instance;
use crate::error::{Error, Result};

/// When a prediction counts as hitting a ground-truth instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "rule", content = "threshold")]
pub enum HitCriterion {
    /// At least one shared voxel.
    #[default]
    Overlap,
    /// Intersection over union at or above the threshold.
    Iou(f64),
}

impl HitCriterion {
    fn hits(self, overlap: usize, pred: &Instance, gt: &Instance) -> bool {
        match self {
            HitCriterion::Overlap => overlap > 0,
            HitCriterion::Iou(t) => {
                let union = pred.len() + gt.len() - overlap;
                overlap > 0 && overlap as f64 / union as f64 >= t
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchEdge {
    pub pred: usize,
    pub gt: usize,
    pub overlap: usize,
}

/// Every hit edge, plus the single GT each prediction is credited to: the
/// hit with the largest overlap (lowest GT index on ties).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub edges: Vec<MatchEdge>,
    pub assignment: Vec<Option<usize>>,
}

pub fn match_instances(pred: &[Instance], gt: &[Instance], criterion: HitCriterion) -> Matching {
    let mut edges = Vec::new();
    let mut assignment = Vec::with_capacity(pred.len());
    for (pi, p) in pred.iter().enumerate() {
        let mut best: Option<(usize, usize)> = None;
        for (gi, g) in gt.iter().enumerate() {
            let overlap = p.overlap(g);
            if !criterion.hits(overlap, p, g) {
                continue;
            }
            edges.push(MatchEdge {
                pred: pi,
                gt: gi,
                overlap,
            });
            if best.is_none_or(|(_, o)| overlap > o) {
                best = Some((gi, overlap));
            }
        }
        assignment.push(best.map(|(gi, _)| gi));
    }
    Matching { edges, assignment }
}

/// Ground truth and scored predictions for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseEval {
    pub gt: Vec<Instance>,
    pub pred: Vec<Instance>,
    pub matching: Matching,
}

/// Detection counts of one case at one score threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseCounts {
    pub detected: usize,
    pub missed: usize,
    pub false_positives: usize,
}

impl CaseEval {
    pub fn new(pred: Vec<Instance>, gt: Vec<Instance>, criterion: HitCriterion) -> Result<Self> {
        if let Some(p) = pred
            .iter()
            .chain(&gt)
            .find(|i| i.is_empty() || !(0.0..=1.0).contains(&i.score))
        {
            return Err(Error::InvalidParameter(format!(
                "instances must be non-empty with score in [0, 1] (score {})",
                p.score
            )));
        }
        let matching = match_instances(&pred, &gt, criterion);
        Ok(CaseEval { gt, pred, matching })
    }

    /// GT instances hit by at least one prediction scoring `>= threshold`.
    pub fn detected_at(&self, threshold: f64) -> Vec<bool> {
        let mut hit = vec![false; self.gt.len()];
        for (p, a) in self.pred.iter().zip(&self.matching.assignment) {
            if let (Some(g), true) = (a, p.score >= threshold) {
                hit[*g] = true;
            }
        }
        hit
    }

    /// Predictions scoring `>= threshold` that hit no GT are false
    /// positives; extra hits on an already-detected GT are neither TP nor FP.
    pub fn counts_at(&self, threshold: f64) -> CaseCounts {
        let hit = self.detected_at(threshold);
        let detected = hit.iter().filter(|&&h| h).count();
        let false_positives = self
            .pred
            .iter()
            .zip(&self.matching.assignment)
            .filter(|(p, a)| p.score >= threshold && a.is_none())
            .count();
        CaseCounts {
            detected,
            missed: self.gt.len() - detected,
            false_positives,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volgrid::{Geometry, Mask};

    fn inst(voxels: &[usize], score: f64) -> Instance {
        let g = Geometry::isotropic([64, 1, 1], 1.0).unwrap();
        Instance::new(voxels.to_vec(), score, &Mask::zeros(g))
    }

    #[test]
    fn identical_sets_match_fully() {
        let gt = vec![inst(&[1, 2], 1.0), inst(&[10, 11, 12], 1.0)];
        let c = CaseEval::new(gt.clone(), gt, HitCriterion::Overlap).unwrap();
        assert_eq!(c.matching.assignment, vec![Some(0), Some(1)]);
        assert_eq!(
            c.counts_at(0.5),
            CaseCounts {
                detected: 2,
                missed: 0,
                false_positives: 0
            }
        );
    }

    #[test]
    fn disjoint_predictions_are_false_positives() {
        let c = CaseEval::new(
            vec![inst(&[5], 0.9), inst(&[6], 0.3)],
            vec![inst(&[1, 2], 1.0)],
            HitCriterion::Overlap,
        )
        .unwrap();
        assert_eq!(
            c.counts_at(0.0),
            CaseCounts {
                detected: 0,
                missed: 1,
                false_positives: 2
            }
        );
        assert_eq!(c.counts_at(0.5).false_positives, 1);
    }

    #[test]
    fn larger_overlap_wins() {
        // one prediction touches GT 0 with one voxel and GT 1 with three
        let pred = vec![inst(&[3, 4, 5, 6], 0.8)];
        let gt = vec![inst(&[1, 2, 3], 1.0), inst(&[4, 5, 6, 7], 1.0)];
        let m = match_instances(&pred, &gt, HitCriterion::Overlap);
        assert_eq!(m.edges.len(), 2);
        assert_eq!(m.assignment, vec![Some(1)]);
        let c = CaseEval::new(pred, gt, HitCriterion::Overlap).unwrap();
        assert_eq!(
            c.counts_at(0.5),
            CaseCounts {
                detected: 1,
                missed: 1,
                false_positives: 0
            }
        );
    }

    #[test]
    fn duplicate_hits_are_not_false_positives() {
        let c = CaseEval::new(
            vec![inst(&[1], 0.9), inst(&[2], 0.8)],
            vec![inst(&[1, 2], 1.0)],
            HitCriterion::Overlap,
        )
        .unwrap();
        assert_eq!(
            c.counts_at(0.0),
            CaseCounts {
                detected: 1,
                missed: 0,
                false_positives: 0
            }
        );
    }

    #[test]
    fn iou_rule_is_stricter() {
        let pred = vec![inst(&[1, 2, 3, 4], 1.0)];
        let gt = vec![inst(&[4, 5, 6, 7], 1.0)];
        assert_eq!(
            match_instances(&pred, &gt, HitCriterion::Overlap).assignment,
            vec![Some(0)]
        );
        assert_eq!(
            match_instances(&pred, &gt, HitCriterion::Iou(0.3)).assignment,
            vec![None]
        );
        assert_eq!(
            match_instances(&pred, &gt, HitCriterion::Iou(1.0 / 7.0)).assignment,
            vec![Some(0)]
        );
    }
}
