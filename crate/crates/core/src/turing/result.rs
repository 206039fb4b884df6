use serde::{Deserialize, Serialize};

use super::{ReaderSession, SessionError, SessionStatus, Truth};
use crate::detect_eval::{roc, RocCurve};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub item_id: String,
    pub case_ref: String,
    pub truth: Truth,
    pub radius_mm: f64,
    pub judgment: Truth,
    pub confidence: f64,
    /// Reader's probability that the item is synthetic.
    pub score: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusAccuracy {
    pub lo_mm: f64,
    pub hi_mm: Option<f64>,
    pub n: usize,
    pub correct: usize,
    /// `None` when no answered item falls in the bin.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub session_id: String,
    pub n_items: usize,
    pub n_answered: usize,
    pub finalized_early: bool,
    pub overlay: bool,
    pub correct: usize,
    pub accuracy: f64,
    /// `None` when the answered items cover only one class.
    pub auc: Option<f64>,
    pub roc: Option<RocCurve>,
    pub radius_threshold_mm: f64,
    /// Below and at-or-above the radius threshold.
    pub by_radius: Vec<RadiusAccuracy>,
    pub items: Vec<ItemOutcome>,
}

/// Scores the answered items of a completed (or finalized) session.
pub fn study_result(session: &ReaderSession) -> Result<StudyResult, SessionError> {
    if session.status != SessionStatus::Complete {
        return Err(SessionError::Incomplete {
            answered: session.answered(),
            total: session.total(),
        });
    }
    let items: Vec<ItemOutcome> = session
        .responses
        .iter()
        .map(|r| {
            let item = session
                .item(&r.item_id)
                .ok_or_else(|| SessionError::UnknownItem(r.item_id.clone()))?;
            let score = match r.judgment {
                Truth::Synthetic => r.confidence,
                Truth::Real => 1.0 - r.confidence,
            };
            Ok(ItemOutcome {
                item_id: item.item_id.clone(),
                case_ref: item.case_ref.clone(),
                truth: item.truth,
                radius_mm: item.radius_mm,
                judgment: r.judgment,
                confidence: r.confidence,
                score,
                correct: r.judgment == item.truth,
            })
        })
        .collect::<Result<_, SessionError>>()?;
    let n = items.len();
    let correct = items.iter().filter(|o| o.correct).count();
    let labels: Vec<bool> = items.iter().map(|o| o.truth == Truth::Synthetic).collect();
    let scores: Vec<f64> = items.iter().map(|o| o.score).collect();
    let roc = roc(&labels, &scores).ok();

    let t = session.options.radius_threshold_mm;
    let bin = |lo: f64, hi: Option<f64>| {
        let inside: Vec<&ItemOutcome> = items
            .iter()
            .filter(|o| o.radius_mm >= lo && hi.is_none_or(|h| o.radius_mm < h))
            .collect();
        let c = inside.iter().filter(|o| o.correct).count();
        RadiusAccuracy {
            lo_mm: lo,
            hi_mm: hi,
            n: inside.len(),
            correct: c,
            accuracy: (!inside.is_empty()).then(|| c as f64 / inside.len() as f64),
        }
    };
    let by_radius = vec![bin(0.0, Some(t)), bin(t, None)];

    Ok(StudyResult {
        session_id: session.id.clone(),
        n_items: session.total(),
        n_answered: n,
        finalized_early: session.finalized_early,
        overlay: session.options.overlay,
        correct,
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        auc: roc.as_ref().map(|r| r.auc),
        roc,
        radius_threshold_mm: t,
        by_radius,
        items,
    })
}
