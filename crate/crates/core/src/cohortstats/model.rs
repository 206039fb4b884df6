use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::case::CaseStats;
use super::regression::{fit_intensity_regression, RegressionParams};
use super::skew_normal::{fit_skew_normal, SkewNormalParams};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const OFFSET_Z_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TumorType {
    #[serde(rename = "PDAC", alias = "pdac")]
    Pdac,
    #[serde(rename = "Cyst", alias = "cyst")]
    Cyst,
}

impl std::str::FromStr for TumorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pdac" => Ok(TumorType::Pdac),
            "cyst" => Ok(TumorType::Cyst),
            _ => Err(Error::InvalidParameter(format!(
                "unknown tumor type {s:?} (PDAC or Cyst)"
            ))),
        }
    }
}

/// Empirical histogram over [-1, 1] with uniform bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetHistogram {
    pub edges: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl OffsetHistogram {
    pub fn uniform(bins: usize) -> Self {
        OffsetHistogram {
            edges: Self::uniform_edges(bins),
            probabilities: vec![1.0 / bins as f64; bins],
        }
    }

    fn uniform_edges(bins: usize) -> Vec<f64> {
        (0..=bins).map(|i| -1.0 + 2.0 * i as f64 / bins as f64).collect()
    }

    /// Values outside [-1, 1] are clamped into the end bins.
    pub fn from_samples(samples: &[f64], bins: usize) -> Self {
        let mut counts = vec![0usize; bins];
        for &s in samples {
            let b = (((s.clamp(-1.0, 1.0) + 1.0) / 2.0) * bins as f64).floor() as usize;
            counts[b.min(bins - 1)] += 1;
        }
        let n = samples.len().max(1) as f64;
        OffsetHistogram {
            edges: Self::uniform_edges(bins),
            probabilities: counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    pub fn bins(&self) -> usize {
        self.probabilities.len()
    }

    pub fn bin_range(&self, bin: usize) -> (f64, f64) {
        (self.edges[bin], self.edges[bin + 1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.probabilities.is_empty() || self.edges.len() != self.probabilities.len() + 1 {
            return Err(Error::Model(format!(
                "offset_z_hist needs n+1 edges for n bins (got {} edges, {} bins)",
                self.edges.len(),
                self.probabilities.len()
            )));
        }
        if self.edges.windows(2).any(|w| !(w[0] < w[1])) || self.edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::Model("offset_z_hist edges must be finite and increasing".into()));
        }
        if self.probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Model("offset_z_hist probabilities must be >= 0".into()));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!(
                "offset_z_hist probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// Draws a bin index with probability proportional to its mass.
    pub fn sample_bin<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.probabilities.iter().sum::<f64>();
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > 0.0 {
                last_nonzero = i;
                acc += p;
                if u < acc {
                    return i;
                }
            }
        }
        last_nonzero
    }
}

/// Fitted cohort statistics for one tumor type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TumorStatsModel {
    pub schema_version: u32,
    pub tumor_type: TumorType,
    pub size_ratio_dist: SkewNormalParams,
    pub intensity_regression: RegressionParams,
    pub offset_z_hist: OffsetHistogram,
    pub neighborhood_radius_mm: f64,
    pub n_cases: usize,
}

impl TumorStatsModel {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Model(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.size_ratio_dist
            .validate()
            .map_err(|e| Error::Model(format!("size_ratio_dist: {e}")))?;
        self.intensity_regression
            .validate()
            .map_err(|e| Error::Model(format!("intensity_regression: {e}")))?;
        self.offset_z_hist.validate()?;
        if !(self.neighborhood_radius_mm.is_finite() && self.neighborhood_radius_mm > 0.0) {
            return Err(Error::Model(format!(
                "neighborhood_radius_mm must be > 0, got {}",
                self.neighborhood_radius_mm
            )));
        }
        Ok(())
    }
}

pub fn fit_stats_model(cases: &[CaseStats], radius_mm: f64, tumor_type: TumorType) -> Result<TumorStatsModel> {
    if cases.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a stats model needs >= 3 cases, got {}",
            cases.len()
        )));
    }
    let ratios: Vec<f64> = cases.iter().map(|c| c.size_ratio).collect();
    let pairs: Vec<(f64, f64)> = cases
        .iter()
        .map(|c| (c.neighborhood_median, c.intensity_residual))
        .collect();
    let offsets: Vec<f64> = cases.iter().map(|c| c.offset_z).collect();
    let model = TumorStatsModel {
        schema_version: SCHEMA_VERSION,
        tumor_type,
        size_ratio_dist: fit_skew_normal(&ratios)?,
        intensity_regression: fit_intensity_regression(&pairs)?,
        offset_z_hist: OffsetHistogram::from_samples(&offsets, OFFSET_Z_BINS),
        neighborhood_radius_mm: radius_mm,
        n_cases: cases.len(),
    };
    model.validate()?;
    Ok(model)
}

pub fn save_stats_model(model: &TumorStatsModel, path: impl AsRef<Path>) -> Result<()> {
    model.validate()?;
    let mut text = serde_json::to_string_pretty(model)?;
    text.push('\n');
    fs::write(path.as_ref(), text).map_err(|e| Error::io(path.as_ref(), e))
}

pub fn load_stats_model(path: impl AsRef<Path>) -> Result<TumorStatsModel> {
    let text = fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Model(format!("malformed JSON: {e}")))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::Model(format!(
                "schema_version {v} is not supported (expected {SCHEMA_VERSION})"
            )))
        }
        None => return Err(Error::Model("missing field `schema_version`".into())),
    }
    let model: TumorStatsModel = serde_json::from_value(value).map_err(|e| Error::Model(e.to_string()))?;
    model.validate()?;
    Ok(model)
}
