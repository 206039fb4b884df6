use std::collections::HashMap;

use rayon::prelude::*;
use serde_json::json;
use tumorsynth_core::detect_eval::report::{build_report, froc_tsv, NamedCase};
use tumorsynth_core::detect_eval::{dice, extract_instances, CaseEval, HitCriterion, SensitivityUnit};
use tumorsynth_core::volgrid::{read_mask, read_volume};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{read_manifest, GroundTruthRow, PredictionRow};
use crate::record::{arg, Recorder};
use crate::{batch, EvaluateArgs};

pub fn run(cfg: &RunConfig, a: &EvaluateArgs) -> CliResult<()> {
    let mut cfg = cfg.clone();
    let opts = &mut cfg.evaluate;
    if let Some(t) = &a.fp_targets {
        opts.fp_targets = t.clone();
    }
    if let Some(e) = &a.radius_edges {
        opts.radius_edges_mm = e.clone();
    }
    if let Some(t) = a.radius_fp_target {
        opts.radius_fp_target = t;
    }
    if a.per_subject {
        opts.unit = SensitivityUnit::PerSubject;
    }
    if let Some(c) = a.connectivity {
        opts.connectivity = c;
    }
    if let Some(t) = a.iou {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CliError::Config(format!("--iou must be in (0, 1], got {t}")));
        }
        opts.hit = HitCriterion::Iou(t);
    }
    let opts = opts.clone();

    let gts: Vec<GroundTruthRow> = read_manifest(&a.gt)?;
    let preds: Vec<PredictionRow> = read_manifest(&a.pred)?;
    let mut by_id: HashMap<&str, &PredictionRow> = preds.iter().map(|p| (p.case_id.as_str(), p)).collect();
    let mut pairs = Vec::with_capacity(gts.len());
    for g in &gts {
        match by_id.remove(g.case_id.as_str()) {
            Some(p) => pairs.push((g, p)),
            None => {
                return Err(CliError::manifest(
                    &a.pred,
                    format!("no prediction for case {:?}", g.case_id),
                ))
            }
        }
    }
    if let Some(extra) = by_id.keys().min() {
        return Err(CliError::manifest(&a.gt, format!("no ground truth for case {extra:?}")));
    }

    let evaluated: Vec<_> = pairs
        .par_iter()
        .map(|(g, p)| {
            let r = (|| -> CliResult<NamedCase> {
                let gt = read_mask(&g.gt_mask)?;
                let pred = read_mask(&p.pred_mask)?;
                let score = p.score_map.as_ref().map(read_volume).transpose()?;
                let gi = extract_instances(&gt, None, opts.connectivity)?;
                let pi = extract_instances(&pred, score.as_ref(), opts.connectivity)?;
                Ok(NamedCase {
                    case_id: g.case_id.clone(),
                    eval: CaseEval::new(pi, gi, opts.hit)?,
                    dice: dice(&pred, &gt)?,
                })
            })();
            (g.case_id.clone(), r)
        })
        .collect();
    let cases = batch(evaluated)?;
    let report = build_report(&cases, &opts)?;

    let rec = Recorder::new(
        &cfg,
        vec![
            "evaluate".into(),
            "--pred".into(),
            arg(&a.pred),
            "--gt".into(),
            arg(&a.gt),
        ],
    )?;
    let details = json!({ "pred": a.pred, "gt": a.gt, "n_subjects": cases.len() });
    let report_json = serde_json::to_string_pretty(&report).map_err(tumorsynth_core::Error::from)? + "\n";
    let outputs = vec![
        rec.artifact("evaluation.json", report_json.as_bytes(), details.clone())?,
        rec.artifact("summary.csv", report.summary_csv().as_bytes(), details.clone())?,
        rec.artifact("froc.tsv", froc_tsv(&report.froc).as_bytes(), details)?,
    ];
    let summary = json!({
        "sensitivity": report.froc.targets.iter().map(|t| json!({"fp_per_subject": t.fp_target, "sensitivity": t.sensitivity})).collect::<Vec<_>>(),
        "radius_bins": report.radius_bins,
        "mean_dice": report.mean_dice,
    });
    rec.finish(&outputs, &summary)?;
    println!("{summary}");
    Ok(())
}
