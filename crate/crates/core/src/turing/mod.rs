//! Visual Turing Test: reader sessions mixing real and synthetic tumor
//! slices, their append-only event log, and the study result.
//!
//! Nothing a reader receives before completion carries the truth label;
//! [`NextItem`] and [`Ack`] only expose ids and progress.

mod plan;
mod result;
mod store;

pub use plan::{plan_items, render_item, select_slice, SliceSelection, StudyCase};
pub use result::{study_result, ItemOutcome, RadiusAccuracy, StudyResult};
pub use store::SessionStore;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detect_eval::SMALL_TUMOR_RADIUS_MM;
use crate::volgrid::WindowSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("session is complete")]
    SessionComplete,
    #[error("item {0} already has a response")]
    DuplicateResponse(String),
    #[error("item {got} is not the current item (expected {expected})")]
    OutOfOrder { expected: String, got: String },
    #[error("confidence {0} outside [0, 1]")]
    BadConfidence(f64),
    #[error("session incomplete: {answered} of {total} items answered")]
    Incomplete { answered: usize, total: usize },
    #[error("{class} manifest has {available} cases, {needed} requested")]
    InsufficientItems {
        class: Truth,
        needed: usize,
        available: usize,
    },
    #[error("corrupt event log {0}")]
    CorruptLog(String),
}

impl SessionError {
    pub fn kind(&self) -> &'static str {
        match self {
            SessionError::UnknownSession(_) => "unknown_session",
            SessionError::UnknownItem(_) => "unknown_item",
            SessionError::SessionComplete => "session_complete",
            SessionError::DuplicateResponse(_) => "duplicate_response",
            SessionError::OutOfOrder { .. } => "out_of_order",
            SessionError::BadConfidence(_) => "bad_confidence",
            SessionError::Incomplete { .. } => "incomplete",
            SessionError::InsufficientItems { .. } => "insufficient_items",
            SessionError::CorruptLog(_) => "corrupt_log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    Real,
    Synthetic,
}

impl std::fmt::Display for Truth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Truth::Real => "real",
            Truth::Synthetic => "synthetic",
        })
    }
}

impl std::str::FromStr for Truth {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "real" => Ok(Truth::Real),
            "synthetic" => Ok(Truth::Synthetic),
            _ => Err(crate::Error::InvalidParameter(format!(
                "judgment must be real or synthetic, got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionOptions {
    pub n_per_class: usize,
    pub seed: u64,
    /// Draw the tumor outline on the slices shown to the reader.
    pub overlay: bool,
    pub window: WindowSpec,
    pub slice_selection: SliceSelection,
    pub radius_threshold_mm: f64,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            n_per_class: 50,
            seed: 0,
            overlay: false,
            window: WindowSpec::abdomen(),
            slice_selection: SliceSelection::MaxArea,
            radius_threshold_mm: SMALL_TUMOR_RADIUS_MM,
        }
    }
}

/// One slice shown to the reader. Stored server-side only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionItem {
    pub item_id: String,
    pub case_ref: String,
    pub image: PathBuf,
    pub mask: PathBuf,
    /// Axial (z) slice index.
    pub slice: usize,
    pub truth: Truth,
    pub radius_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub item_id: String,
    pub judgment: Truth,
    pub confidence: f64,
    #[serde(default)]
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderSession {
    pub id: String,
    pub options: SessionOptions,
    pub items: Vec<SessionItem>,
    pub responses: Vec<Response>,
    pub status: SessionStatus,
    /// Set when results were unlocked before every item was answered.
    pub finalized_early: bool,
}

/// Reader-facing view of the current position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NextItem {
    Active {
        item_id: String,
        /// 1-based position of the item.
        position: usize,
        total: usize,
        answered: usize,
    },
    Complete {
        total: usize,
        answered: usize,
    },
}

/// Reader-facing acknowledgement of a stored response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub item_id: String,
    pub answered: usize,
    pub total: usize,
    pub status: SessionStatus,
}

impl ReaderSession {
    pub fn new(id: String, options: SessionOptions, items: Vec<SessionItem>) -> Self {
        ReaderSession {
            id,
            options,
            items,
            responses: Vec::new(),
            status: SessionStatus::Active,
            finalized_early: false,
        }
    }

    pub fn total(&self) -> usize {
        self.items.len()
    }

    pub fn answered(&self) -> usize {
        self.responses.len()
    }

    pub fn item(&self, item_id: &str) -> Option<&SessionItem> {
        self.items.iter().find(|i| i.item_id == item_id)
    }

    /// The first unanswered item, until the session completes.
    pub fn next_item(&self) -> NextItem {
        let answered = self.answered();
        match (self.status, self.items.get(answered)) {
            (SessionStatus::Active, Some(item)) => NextItem::Active {
                item_id: item.item_id.clone(),
                position: answered + 1,
                total: self.total(),
                answered,
            },
            _ => NextItem::Complete {
                total: self.total(),
                answered,
            },
        }
    }

    /// Checks a response against the session without changing it.
    pub fn validate_response(&self, r: &Response) -> Result<(), SessionError> {
        if !(0.0..=1.0).contains(&r.confidence) {
            return Err(SessionError::BadConfidence(r.confidence));
        }
        if self.item(&r.item_id).is_none() {
            return Err(SessionError::UnknownItem(r.item_id.clone()));
        }
        if self.responses.iter().any(|x| x.item_id == r.item_id) {
            return Err(SessionError::DuplicateResponse(r.item_id.clone()));
        }
        if self.status == SessionStatus::Complete {
            return Err(SessionError::SessionComplete);
        }
        let expected = &self.items[self.answered()].item_id;
        if *expected != r.item_id {
            return Err(SessionError::OutOfOrder {
                expected: expected.clone(),
                got: r.item_id.clone(),
            });
        }
        Ok(())
    }

    pub(crate) fn apply_response(&mut self, r: Response) {
        self.responses.push(r);
        if self.answered() == self.total() {
            self.status = SessionStatus::Complete;
        }
    }

    pub(crate) fn apply_finalize(&mut self) {
        if self.status == SessionStatus::Active {
            self.status = SessionStatus::Complete;
            self.finalized_early = self.answered() < self.total();
        }
    }

    pub fn ack(&self, item_id: &str) -> Ack {
        Ack {
            item_id: item_id.to_string(),
            answered: self.answered(),
            total: self.total(),
            status: self.status,
        }
    }

    pub fn results(&self) -> Result<StudyResult, SessionError> {
        study_result(self)
    }
}
