use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use tumorsynth_core::turing::{plan_items, render_item, StudyCase, Truth};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::manifest::{read_manifest, write_manifest, StudyRow};
use crate::record::{arg, Recorder};
use crate::{batch, TuringExportArgs};

/// Reader-facing listing: no truth.
#[derive(Serialize)]
struct ItemRow<'a> {
    item_id: &'a str,
    png: String,
}

/// Answer key, kept apart from the slices.
#[derive(Serialize)]
struct KeyRow<'a> {
    item_id: &'a str,
    case_ref: &'a str,
    truth: Truth,
    slice: usize,
    radius_mm: f64,
}

pub fn run(cfg: &RunConfig, a: &TuringExportArgs) -> CliResult<()> {
    let mut cfg = cfg.clone();
    if let Some(n) = a.n_per_class {
        cfg.turing.n_per_class = n;
    }
    if a.overlay {
        cfg.turing.overlay = true;
    }
    if let Some(s) = a.slice_selection {
        cfg.turing.slice_selection = s;
    }
    let opts = cfg.turing.clone();
    let real: Vec<StudyCase> = read_manifest::<StudyRow>(&a.real)?
        .into_iter()
        .map(Into::into)
        .collect();
    let synth: Vec<StudyCase> = read_manifest::<StudyRow>(&a.synth)?
        .into_iter()
        .map(Into::into)
        .collect();
    let items = plan_items(&real, &synth, &opts)?;

    let mut args = vec![
        "turing-export".into(),
        "--real".into(),
        arg(&a.real),
        "--synth".into(),
        arg(&a.synth),
        "--n-per-class".into(),
        opts.n_per_class.to_string(),
    ];
    if opts.overlay {
        args.push("--overlay".into());
    }
    let rec = Recorder::new(&cfg, args)?;

    let rendered: Vec<_> = items
        .par_iter()
        .map(|item| {
            let r = (|| -> CliResult<std::path::PathBuf> {
                let png = render_item(item, opts.overlay, opts.window)?;
                let details =
                    json!({ "item_id": item.item_id, "axis": "z", "window": opts.window, "overlay": opts.overlay });
                rec.artifact(&format!("slices/{}.png", item.item_id), &png, details)
            })();
            (item.item_id.clone(), r)
        })
        .collect();
    let mut outputs = batch(rendered)?;

    let listing: Vec<ItemRow> = items
        .iter()
        .map(|i| ItemRow {
            item_id: &i.item_id,
            png: format!("slices/{}.png", i.item_id),
        })
        .collect();
    let key: Vec<KeyRow> = items
        .iter()
        .map(|i| KeyRow {
            item_id: &i.item_id,
            case_ref: &i.case_ref,
            truth: i.truth,
            slice: i.slice,
            radius_mm: i.radius_mm,
        })
        .collect();
    let details = json!({ "items": items.len() });
    let listing_path = rec.path("items.csv");
    write_manifest(&listing_path, &listing)?;
    rec.sidecar(&listing_path, details.clone())?;
    let key_path = rec.path("key.csv");
    write_manifest(&key_path, &key)?;
    rec.sidecar(&key_path, details)?;
    outputs.extend([listing_path, key_path]);
    let summary = json!({ "items": items.len(), "n_per_class": opts.n_per_class, "overlay": opts.overlay });
    rec.finish(&outputs, &summary)?;
    println!("{summary}");
    Ok(())
}
