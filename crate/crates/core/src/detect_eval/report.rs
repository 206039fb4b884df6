//! Evaluation reports: JSON document, CSV summary and plot-ready TSV.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    froc_with_unit, stratified_sensitivity, BinSensitivity, CaseEval, Connectivity, FrocCurve, HitCriterion, RocCurve,
    SensitivityUnit, DEFAULT_FP_TARGETS, DEFAULT_RADIUS_EDGES_MM,
};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub fp_targets: Vec<f64>,
    pub radius_edges_mm: Vec<f64>,
    /// FP rate whose threshold is used for the radius table.
    pub radius_fp_target: f64,
    pub unit: SensitivityUnit,
    pub hit: HitCriterion,
    pub connectivity: Connectivity,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            fp_targets: DEFAULT_FP_TARGETS.to_vec(),
            radius_edges_mm: DEFAULT_RADIUS_EDGES_MM.to_vec(),
            radius_fp_target: 1.0,
            unit: SensitivityUnit::PerTumor,
            hit: HitCriterion::Overlap,
            connectivity: Connectivity::TwentySix,
        }
    }
}

/// One evaluated subject.
#[derive(Debug, Clone)]
pub struct NamedCase {
    pub case_id: String,
    pub eval: CaseEval,
    pub dice: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub case_id: String,
    pub n_gt: usize,
    pub n_pred: usize,
    pub dice: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub options: EvalOptions,
    pub froc: FrocCurve,
    pub mean_sensitivity: f64,
    pub radius_bins: Vec<BinSensitivity>,
    pub mean_dice: f64,
    pub cases: Vec<CaseRow>,
}

pub fn build_report(cases: &[NamedCase], options: &EvalOptions) -> Result<EvaluationReport> {
    let evals: Vec<CaseEval> = cases.iter().map(|c| c.eval.clone()).collect();
    let froc = froc_with_unit(&evals, &options.fp_targets, options.unit)?;
    let radius_bins = stratified_sensitivity(&evals, &options.radius_edges_mm, options.radius_fp_target)?;
    let mean_dice = cases.iter().map(|c| c.dice).sum::<f64>() / cases.len() as f64;
    Ok(EvaluationReport {
        options: options.clone(),
        mean_sensitivity: froc.mean_sensitivity(),
        froc,
        radius_bins,
        mean_dice,
        cases: cases
            .iter()
            .map(|c| CaseRow {
                case_id: c.case_id.clone(),
                n_gt: c.eval.gt.len(),
                n_pred: c.eval.pred.len(),
                dice: c.dice,
            })
            .collect(),
    })
}

impl EvaluationReport {
    /// `metric,value` rows: one per FP target, one per radius bin, then
    /// the aggregates. Undefined bins are written as `NA`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for t in &self.froc.targets {
            let _ = writeln!(out, "sensitivity@{}fp,{}", t.fp_target, t.sensitivity);
        }
        for b in &self.radius_bins {
            let hi = b.hi_mm.map_or("inf".to_string(), |h| h.to_string());
            let v = b.sensitivity.map_or("NA".to_string(), |s| s.to_string());
            let _ = writeln!(out, "sensitivity_radius_{}-{}mm,{}", b.lo_mm, hi, v);
        }
        let _ = writeln!(out, "mean_sensitivity,{}", self.mean_sensitivity);
        let _ = writeln!(out, "mean_dice,{}", self.mean_dice);
        let _ = writeln!(out, "n_subjects,{}", self.froc.n_subjects);
        let _ = writeln!(out, "n_gt,{}", self.froc.n_gt);
        out
    }
}

pub fn froc_tsv(curve: &FrocCurve) -> String {
    let mut out = String::from("threshold\tfp_per_subject\tsensitivity\n");
    for p in &curve.points {
        let _ = writeln!(out, "{}\t{}\t{}", p.threshold, p.fp_per_subject, p.sensitivity);
    }
    out
}

pub fn roc_tsv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold\tfpr\ttpr\n");
    for p in &curve.points {
        let t = p.threshold.map_or("inf".to_string(), |t| t.to_string());
        let _ = writeln!(out, "{}\t{}\t{}", t, p.fpr, p.tpr);
    }
    out
}
