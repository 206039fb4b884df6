//! Statistical pancreatic tumor synthesis for CT volumes, plus the
//! detection/segmentation metrics and reader-study logic used to evaluate it.
//!
//! - [`volgrid`]: volumes, masks, NIfTI-1 I/O, slice rendering
//! - [`cohortstats`]: per-case tumor measurements and fitted cohort models
//! - [`synth`]: shape, position and texture generation of synthetic tumors
//! - [`detect_eval`]: instances, FROC, Dice, radius-stratified sensitivity, ROC
//! - [`turing`]: Visual Turing Test sessions, event log and results

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod cohortstats;
pub mod detect_eval;
pub mod error;
pub mod filter;
pub mod numeric;
pub mod phantom;
pub mod rng;
pub mod synth;
pub mod turing;
pub mod volgrid;

pub use cohortstats::{CaseStats, RegressionParams, SkewNormalParams, TumorStatsModel, TumorType};
pub use detect_eval::{FrocCurve, Instance};
pub use error::{Error, Result};
pub use synth::{SynthesisConfig, SynthesisResult};
pub use turing::{ReaderSession, StudyResult};
pub use volgrid::{Geometry, Mask, Volume, WindowSpec};
