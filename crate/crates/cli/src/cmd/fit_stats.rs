use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use tumorsynth_core::cohortstats::{compute_case_stats, fit_stats_model, save_stats_model};
use tumorsynth_core::volgrid::{read_mask, read_volume};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::manifest::{read_manifest, write_manifest, CohortRow};
use crate::record::{arg, Recorder};
use crate::{batch, FitStatsArgs};

#[derive(Serialize)]
struct StatsRow<'a> {
    case_id: &'a str,
    size_ratio: f64,
    neighborhood_median: f64,
    tumor_median: f64,
    intensity_residual: f64,
    offset_z: f64,
}

pub fn run(cfg: &RunConfig, a: &FitStatsArgs) -> CliResult<()> {
    let radius = a.radius_mm.unwrap_or(cfg.fit.neighborhood_radius_mm);
    let tumor_type = a.tumor_type.unwrap_or(cfg.fit.tumor_type);
    let rows: Vec<CohortRow> = read_manifest(&a.manifest)?;

    let measured: Vec<_> = rows
        .par_iter()
        .map(|r| {
            let stats = (|| {
                let v = read_volume(&r.image)?;
                let p = read_mask(&r.pancreas_mask)?;
                let t = read_mask(&r.tumor_mask)?;
                Ok(compute_case_stats(&v, &p, &t, radius)?)
            })();
            (r.case_id.clone(), stats)
        })
        .collect();
    let stats = batch(measured)?;
    let model = fit_stats_model(&stats, radius, tumor_type)?;

    let mut cfg = cfg.clone();
    cfg.fit.neighborhood_radius_mm = radius;
    cfg.fit.tumor_type = tumor_type;
    let rec = Recorder::new(
        &cfg,
        vec![
            "fit-stats".into(),
            "--manifest".into(),
            arg(&a.manifest),
            "--radius-mm".into(),
            radius.to_string(),
        ],
    )?;
    let details = json!({ "manifest": a.manifest, "n_cases": rows.len() });

    let model_path = rec.path("stats_model.json");
    save_stats_model(&model, &model_path)?;
    rec.sidecar(&model_path, details.clone())?;

    let table: Vec<StatsRow> = rows
        .iter()
        .zip(&stats)
        .map(|(r, s)| StatsRow {
            case_id: &r.case_id,
            size_ratio: s.size_ratio,
            neighborhood_median: s.neighborhood_median,
            tumor_median: s.tumor_median,
            intensity_residual: s.intensity_residual,
            offset_z: s.offset_z,
        })
        .collect();
    let stats_path = rec.path("case_stats.csv");
    write_manifest(&stats_path, &table)?;
    rec.sidecar(&stats_path, details)?;

    let summary = json!({
        "n_cases": model.n_cases,
        "size_ratio_mean": model.size_ratio_dist.mean(),
        "alpha": model.intensity_regression.alpha,
        "beta": model.intensity_regression.beta,
        "sigma_eps": model.intensity_regression.sigma_eps,
    });
    rec.finish(&[model_path, stats_path], &summary)?;
    println!("{summary}");
    Ok(())
}
