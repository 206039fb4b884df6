//! CSV manifests with header rows. Relative paths are resolved against the
//! manifest's own directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tumorsynth_core::turing::StudyCase;

use crate::error::{CliError, CliResult};

pub trait Row: DeserializeOwned {
    fn case_id(&self) -> &str;
    fn paths_mut(&mut self) -> Vec<&mut PathBuf>;
}

macro_rules! row {
    ($name:ident { $($(#[$m:meta])* $req:ident),* ; $($opt:ident),* }) => {
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            pub case_id: String,
            $($(#[$m])* pub $req: PathBuf,)*
            $(#[serde(default)] pub $opt: Option<PathBuf>,)*
        }

        impl Row for $name {
            fn case_id(&self) -> &str {
                &self.case_id
            }
            #[allow(unused_mut)]
            fn paths_mut(&mut self) -> Vec<&mut PathBuf> {
                let mut v: Vec<&mut PathBuf> = vec![$(&mut self.$req),*];
                $(if let Some(p) = self.$opt.as_mut() { v.push(p); })*
                v
            }
        }
    };
}

row!(CohortRow { image, pancreas_mask, tumor_mask ; });
row!(HealthyRow { image, pancreas_mask ; lesion_mask });
row!(PredictionRow { pred_mask ; score_map });
row!(GroundTruthRow { gt_mask ; });
// Cohort manifests (`tumor_mask`) double as study manifests.
row!(StudyRow { image, #[serde(alias = "tumor_mask")] mask ; });

impl From<StudyRow> for StudyCase {
    fn from(r: StudyRow) -> Self {
        StudyCase {
            case_ref: r.case_id,
            image: r.image,
            mask: r.mask,
        }
    }
}

pub fn read_manifest<T: Row>(path: &Path) -> CliResult<Vec<T>> {
    let parent = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let base = std::path::absolute(&parent).map_err(|e| CliError::io(&parent, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::manifest(path, e.to_string()))?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (n, rec) in reader.deserialize::<T>().enumerate() {
        let mut row = rec.map_err(|e| CliError::manifest(path, e.to_string()))?;
        if row.case_id().is_empty() {
            return Err(CliError::manifest(path, format!("row {}: empty case_id", n + 1)));
        }
        if !seen.insert(row.case_id().to_string()) {
            return Err(CliError::manifest(
                path,
                format!("duplicate case_id {:?}", row.case_id()),
            ));
        }
        for p in row.paths_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::manifest(path, "no rows"));
    }
    Ok(rows)
}

pub fn write_manifest<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::manifest(path, e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::manifest(path, e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
