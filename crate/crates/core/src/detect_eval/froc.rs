use std::collections::BTreeMap;

use ordered::Desc;
use serde::{Deserialize, Serialize};

use super::matching::CaseEval;
use crate::error::{Error, Result};

/// False-positive rates reported by default: the operating points of the
/// detection comparison (0.7 to 1.0 per subject) plus the 0.05 high-specificity point.
pub const DEFAULT_FP_TARGETS: [f64; 5] = [0.05, 0.7, 0.8, 0.9, 1.0];

/// What a sensitivity is a fraction of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SensitivityUnit {
    /// Detected GT instances over all GT instances.
    #[default]
    PerTumor,
    /// Subjects with at least one detected GT over subjects with any GT.
    PerSubject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrocPoint {
    /// Predictions scoring at or above this value are kept.
    pub threshold: f64,
    pub false_positives: usize,
    pub fp_per_subject: f64,
    pub detected: usize,
    pub sensitivity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSensitivity {
    pub fp_target: f64,
    pub sensitivity: f64,
    /// Lowest threshold whose FP rate stays within the target; `None` if
    /// even the strictest threshold exceeds it.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrocCurve {
    pub n_subjects: usize,
    pub n_gt: usize,
    pub unit: SensitivityUnit,
    /// One point per distinct prediction score, strictest threshold first.
    pub points: Vec<FrocPoint>,
    pub targets: Vec<TargetSensitivity>,
}

impl FrocCurve {
    pub fn sensitivity_at(&self, fp_target: f64) -> f64 {
        target_on(&self.points, fp_target).sensitivity
    }

    pub fn threshold_at(&self, fp_target: f64) -> Option<f64> {
        target_on(&self.points, fp_target).threshold
    }

    /// Mean of the per-target sensitivities.
    pub fn mean_sensitivity(&self) -> f64 {
        if self.targets.is_empty() {
            return 0.0;
        }
        self.targets.iter().map(|t| t.sensitivity).sum::<f64>() / self.targets.len() as f64
    }
}

mod ordered {
    /// Descending total order on f64 for use as a map key.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Desc(pub f64);
    impl Eq for Desc {}
    impl PartialOrd for Desc {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Desc {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            other.0.total_cmp(&self.0)
        }
    }
}

/// Step-function lookup: the best sensitivity among points with
/// `fp_per_subject <= target`, no interpolation.
fn target_on(points: &[FrocPoint], fp_target: f64) -> TargetSensitivity {
    let mut out = TargetSensitivity {
        fp_target,
        sensitivity: 0.0,
        threshold: None,
    };
    for p in points {
        if p.fp_per_subject <= fp_target {
            out.sensitivity = out.sensitivity.max(p.sensitivity);
            out.threshold = Some(p.threshold);
        }
    }
    out
}

pub fn froc(cases: &[CaseEval], fp_targets: &[f64]) -> Result<FrocCurve> {
    froc_with_unit(cases, fp_targets, SensitivityUnit::PerTumor)
}

/// Sweeps the score threshold over every distinct prediction score.
pub fn froc_with_unit(cases: &[CaseEval], fp_targets: &[f64], unit: SensitivityUnit) -> Result<FrocCurve> {
    if cases.is_empty() {
        return Err(Error::InsufficientData("FROC needs at least one case".into()));
    }
    if let Some(t) = fp_targets.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidParameter(format!("FP targets must be > 0, got {t}")));
    }
    let n_gt: usize = cases.iter().map(|c| c.gt.len()).sum();
    if n_gt == 0 {
        return Err(Error::InsufficientData("no ground-truth instances in any case".into()));
    }
    let subjects_with_gt = cases.iter().filter(|c| !c.gt.is_empty()).count();

    // predictions grouped by score, strictest first
    let mut by_score: BTreeMap<Desc, Vec<(usize, Option<usize>)>> = BTreeMap::new();
    for (ci, c) in cases.iter().enumerate() {
        for (p, a) in c.pred.iter().zip(&c.matching.assignment) {
            by_score.entry(Desc(p.score)).or_default().push((ci, *a));
        }
    }

    let mut hit: Vec<Vec<bool>> = cases.iter().map(|c| vec![false; c.gt.len()]).collect();
    let mut subject_hit = vec![false; cases.len()];
    let (mut fp, mut detected, mut subjects) = (0usize, 0usize, 0usize);
    let mut points = Vec::with_capacity(by_score.len());
    for (Desc(score), preds) in by_score {
        for (ci, a) in preds {
            match a {
                None => fp += 1,
                Some(g) if !hit[ci][g] => {
                    hit[ci][g] = true;
                    detected += 1;
                    if !subject_hit[ci] {
                        subject_hit[ci] = true;
                        subjects += 1;
                    }
                }
                Some(_) => {}
            }
        }
        let sensitivity = match unit {
            SensitivityUnit::PerTumor => detected as f64 / n_gt as f64,
            SensitivityUnit::PerSubject => subjects as f64 / subjects_with_gt as f64,
        };
        points.push(FrocPoint {
            threshold: score,
            false_positives: fp,
            fp_per_subject: fp as f64 / cases.len() as f64,
            detected,
            sensitivity,
        });
    }
    let targets = fp_targets.iter().map(|&t| target_on(&points, t)).collect();
    Ok(FrocCurve {
        n_subjects: cases.len(),
        n_gt,
        unit,
        points,
        targets,
    })
}
