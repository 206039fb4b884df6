use serde::Serialize;
use serde_json::json;
use tumorsynth_core::phantom::{phantom, PhantomSpec};
use tumorsynth_core::rng::split_seed;
use tumorsynth_core::volgrid::{write_mask, write_volume};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::write_manifest;
use crate::record::Recorder;
use crate::PhantomArgs;

#[derive(Serialize)]
struct HealthyOut {
    case_id: String,
    image: String,
    pancreas_mask: String,
}

#[derive(Serialize)]
struct CohortOut {
    case_id: String,
    image: String,
    pancreas_mask: String,
    tumor_mask: String,
}

/// Uniform in [-1, 1) from the top 53 bits of a derived stream.
fn symmetric_unit(seed: u64, stream: u64) -> f64 {
    let u = (split_seed(seed, u64::MAX - stream) >> 11) as f64 / (1u64 << 53) as f64;
    2.0 * u - 1.0
}

pub fn run(cfg: &RunConfig, a: &PhantomArgs) -> CliResult<()> {
    if a.count == 0 {
        return Err(CliError::Config("--count must be >= 1".into()));
    }
    let base = if a.small {
        PhantomSpec::small()
    } else {
        PhantomSpec::default()
    };
    let mut args = vec![
        "phantom".into(),
        "--count".into(),
        a.count.to_string(),
        "--noise-hu".into(),
        a.noise_hu.to_string(),
    ];
    if a.small {
        args.push("--small".into());
    }
    if a.hu_jitter != 0.0 {
        args.extend(["--hu-jitter".into(), a.hu_jitter.to_string()]);
    }
    if let Some(r) = a.lesion_radius_mm {
        args.extend(["--lesion-radius-mm".into(), r.to_string()]);
        if a.radius_jitter_mm != 0.0 {
            args.extend(["--radius-jitter-mm".into(), a.radius_jitter_mm.to_string()]);
        }
    }
    let rec = Recorder::new(cfg, args)?;
    let mut healthy = Vec::new();
    let mut cohort = Vec::new();
    let mut outputs = Vec::new();
    for i in 0..a.count {
        let seed = split_seed(cfg.seed, i as u64);
        let pancreas_hu = base.pancreas_hu + a.hu_jitter * symmetric_unit(seed, 0);
        let spec = PhantomSpec {
            noise_hu: a.noise_hu,
            seed,
            pancreas_hu,
            ..base.clone()
        };
        let p = phantom(&spec);
        let id = format!("phantom_{i:03}");
        let details = json!({ "spec": spec, "index": i });
        let (image, pancreas) = (format!("{id}.nii.gz"), format!("{id}_pancreas.nii.gz"));
        write_volume(&p.volume, rec.path(&image))?;
        write_mask(&p.pancreas, rec.path(&pancreas))?;
        for f in [&image, &pancreas] {
            rec.sidecar(&rec.path(f), details.clone())?;
            outputs.push(rec.path(f));
        }
        if let Some(r) = a.lesion_radius_mm {
            let r = (r + a.radius_jitter_mm * symmetric_unit(seed, 1)).max(0.0);
            let c = p
                .pancreas
                .centroid()
                .expect("phantom pancreas is non-empty")
                .map(|v| v.round() as usize);
            let (v, t) = p.with_lesion(c, r, (spec.pancreas_hu - 40.0) as f32);
            let (limage, tumor) = (format!("{id}_lesion.nii.gz"), format!("{id}_tumor.nii.gz"));
            write_volume(&v, rec.path(&limage))?;
            write_mask(&t, rec.path(&tumor))?;
            let details = json!({ "spec": spec, "index": i, "lesion_radius_mm": r, "lesion_center_voxel": c });
            for f in [&limage, &tumor] {
                rec.sidecar(&rec.path(f), details.clone())?;
                outputs.push(rec.path(f));
            }
            cohort.push(CohortOut {
                case_id: id.clone(),
                image: limage,
                pancreas_mask: pancreas.clone(),
                tumor_mask: tumor,
            });
        }
        healthy.push(HealthyOut {
            case_id: id,
            image,
            pancreas_mask: pancreas,
        });
    }
    let path = rec.path("healthy.csv");
    write_manifest(&path, &healthy)?;
    rec.sidecar(&path, json!({ "cases": a.count }))?;
    outputs.push(path);
    if !cohort.is_empty() {
        let path = rec.path("cohort.csv");
        write_manifest(&path, &cohort)?;
        rec.sidecar(&path, json!({ "cases": a.count }))?;
        outputs.push(path);
    }
    let summary = json!({ "cases": a.count, "cohort": !cohort.is_empty() });
    rec.finish(&outputs, &summary)?;
    println!("{summary}");
    Ok(())
}
