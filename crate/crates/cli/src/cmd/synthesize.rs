use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use tumorsynth_core::cohortstats::load_stats_model;
use tumorsynth_core::rng::split_seed;
use tumorsynth_core::synth::synthesize_with_seed;
use tumorsynth_core::volgrid::{read_mask, read_volume, write_mask, write_volume};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::{read_manifest, write_manifest, HealthyRow};
use crate::record::{arg, Recorder};
use crate::SynthesizeArgs;

/// Row of `synth_manifest.csv`; readable as a turing study manifest.
#[derive(Debug, Clone, Serialize)]
struct SynthRow {
    case_id: String,
    image: String,
    mask: String,
    pancreas_mask: PathBuf,
    source_case_id: String,
    variant: usize,
    seed: u64,
    tumors_placed: usize,
}

pub fn run(cfg: &RunConfig, a: &SynthesizeArgs) -> CliResult<()> {
    let mut cfg = cfg.clone();
    if let Some(v) = a.variants {
        cfg.batch.variants_per_case = v;
    }
    if let Some(t) = a.tumors {
        cfg.synthesis.tumors_per_volume = t;
    }
    cfg.synthesis.validate()?;
    let variants = cfg.batch.variants_per_case;
    if variants == 0 {
        return Err(CliError::Config("variants_per_case must be >= 1".into()));
    }
    let rows: Vec<HealthyRow> = read_manifest(&a.manifest)?;
    let model = load_stats_model(&a.model)?;
    let rec = Recorder::new(
        &cfg,
        vec![
            "synthesize".into(),
            "--manifest".into(),
            arg(&a.manifest),
            "--model".into(),
            arg(&a.model),
            "--variants".into(),
            variants.to_string(),
            "--tumors".into(),
            cfg.synthesis.tumors_per_volume.to_string(),
        ],
    )?;

    // image `k = case * variants + v` uses stream `split_seed(seed, k)`,
    // so outputs do not depend on scheduling
    let per_case: Vec<(String, CliResult<Vec<SynthRow>>)> = rows
        .par_iter()
        .enumerate()
        .map(|(ci, row)| {
            let out = (|| -> CliResult<Vec<SynthRow>> {
                let volume = read_volume(&row.image)?;
                let pancreas = read_mask(&row.pancreas_mask)?;
                let lesions = row.lesion_mask.as_ref().map(read_mask).transpose()?;
                let mut made = Vec::with_capacity(variants);
                for v in 0..variants {
                    let seed = split_seed(cfg.seed, (ci * variants + v) as u64);
                    let r = synthesize_with_seed(&volume, &pancreas, lesions.as_ref(), &model, &cfg.synthesis, seed)?;
                    let id = format!("{}_syn{v}", row.case_id);
                    let image = format!("{id}.nii.gz");
                    let mask = format!("{id}_tumor.nii.gz");
                    let details = json!({
                        "source": row,
                        "variant": v,
                        "seed": seed,
                        "model": model,
                        "provenance": r.provenance,
                    });
                    let (ip, mp) = (rec.path(&image), rec.path(&mask));
                    write_volume(&r.volume, &ip)?;
                    rec.sidecar(&ip, details.clone())?;
                    write_mask(&r.tumor_mask, &mp)?;
                    rec.sidecar(&mp, details)?;
                    made.push(SynthRow {
                        case_id: id,
                        image,
                        mask,
                        pancreas_mask: row.pancreas_mask.clone(),
                        source_case_id: row.case_id.clone(),
                        variant: v,
                        seed,
                        tumors_placed: r.provenance.tumors_placed,
                    });
                }
                Ok(made)
            })();
            (row.case_id.clone(), out)
        })
        .collect();

    let total = per_case.len();
    let mut made = Vec::new();
    let mut failures = Vec::new();
    for (case, r) in per_case {
        match r {
            Ok(rows) => made.extend(rows),
            Err(e) => failures.push(json!({ "case_id": case, "error": e.kind(), "message": e.to_string() })),
        }
    }
    let manifest_path = rec.path("synth_manifest.csv");
    write_manifest(&manifest_path, &made)?;
    rec.sidecar(&manifest_path, json!({ "images": made.len() }))?;

    let mut outputs: Vec<PathBuf> = made
        .iter()
        .flat_map(|r| [rec.path(&r.image), rec.path(&r.mask)])
        .collect();
    outputs.push(manifest_path);
    let summary = json!({ "cases": total, "images": made.len(), "failures": failures });
    rec.finish(&outputs, &summary)?;
    println!("{summary}");
    match failures.first() {
        None => Ok(()),
        Some(f) => Err(CliError::Batch {
            failed: failures.len(),
            total,
            first: format!(
                "{}: {}",
                f["case_id"].as_str().unwrap_or(""),
                f["message"].as_str().unwrap_or("")
            ),
        }),
    }
}
