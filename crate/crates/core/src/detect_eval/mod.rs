//! Detection and segmentation metrics.
//!
//! Predictions and ground truth are split into connected instances, matched
//! by voxel overlap and swept over score thresholds for FROC. Dice works on
//! raw masks; ROC takes plain label/score lists.

mod dice;
mod froc;
mod instances;
mod matching;
pub mod report;
mod roc;
mod stratify;

pub use dice::dice;
pub use froc::{froc, froc_with_unit, FrocCurve, FrocPoint, SensitivityUnit, TargetSensitivity, DEFAULT_FP_TARGETS};
pub use instances::{extract_instances, Instance};
pub use matching::{match_instances, CaseCounts, CaseEval, HitCriterion, MatchEdge, Matching};
pub use roc::{roc, RocCurve, RocPoint};
pub use stratify::{stratified_sensitivity, BinSensitivity, DEFAULT_RADIUS_EDGES_MM, SMALL_TUMOR_RADIUS_MM};

use serde::{Deserialize, Serialize};

/// Neighbourhood used for connected components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Connectivity {
    #[serde(rename = "6")]
    Six,
    #[default]
    #[serde(rename = "26")]
    TwentySix,
}

impl Connectivity {
    pub fn offsets(self) -> Vec<[i64; 3]> {
        let mut out = Vec::new();
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let manhattan = dx.abs() + dy.abs() + dz.abs();
                    let keep = match self {
                        Connectivity::Six => manhattan == 1,
                        Connectivity::TwentySix => manhattan > 0,
                    };
                    if keep {
                        out.push([dx, dy, dz]);
                    }
                }
            }
        }
        out
    }
}

impl std::str::FromStr for Connectivity {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "6" => Ok(Connectivity::Six),
            "26" => Ok(Connectivity::TwentySix),
            _ => Err(crate::Error::InvalidParameter(format!(
                "connectivity must be 6 or 26, got {s:?}"
            ))),
        }
    }
}
