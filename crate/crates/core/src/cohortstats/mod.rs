//! Cohort statistics: per-case tumor measurements and the fitted
//! distributions that drive synthesis.

mod case;
mod model;
mod regression;
mod skew_normal;

pub(crate) use case::neighborhood_values;
pub use case::{compute_case_stats, CaseStats, DEFAULT_NEIGHBORHOOD_RADIUS_MM};
pub use model::{
    fit_stats_model, load_stats_model, save_stats_model, OffsetHistogram, TumorStatsModel, TumorType, OFFSET_Z_BINS,
    SCHEMA_VERSION,
};
pub use regression::{fit_intensity_regression, RegressionParams};
pub use skew_normal::{fit_skew_normal, sample_skew_normal, SkewNormalParams, MAX_SKEWNESS};
