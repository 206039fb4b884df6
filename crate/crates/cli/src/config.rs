//! Run configuration: defaults, JSON config file, environment and flags.
//!
//! Precedence is flags > environment > config file > defaults. Flags and
//! their `TUMORSYNTH_*` variables are merged by clap; [`RunConfig::resolve`]
//! then lays them over the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tumorsynth_core::cohortstats::{TumorType, DEFAULT_NEIGHBORHOOD_RADIUS_MM};
use tumorsynth_core::detect_eval::report::EvalOptions;
use tumorsynth_core::turing::SessionOptions;
use tumorsynth_core::SynthesisConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    /// Synthetic images produced from each healthy case.
    pub variants_per_case: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig { variants_per_case: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub neighborhood_radius_mm: f64,
    pub tumor_type: TumorType,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            neighborhood_radius_mm: DEFAULT_NEIGHBORHOOD_RADIUS_MM,
            tumor_type: TumorType::Pdac,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub addr: String,
    pub sessions_dir: PathBuf,
    /// Directory with the reader UI bundle, served at `/`.
    pub ui_dir: Option<PathBuf>,
    pub real_manifest: Option<PathBuf>,
    pub synth_manifest: Option<PathBuf>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            addr: "127.0.0.1:8080".into(),
            sessions_dir: PathBuf::from("sessions"),
            ui_dir: None,
            real_manifest: None,
            synth_manifest: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. Overrides `synthesis.seed` and `turing.seed`.
    pub seed: u64,
    /// Worker threads; 0 uses every core. Outputs do not depend on it.
    pub jobs: usize,
    pub out: PathBuf,
    pub synthesis: SynthesisConfig,
    pub batch: BatchConfig,
    pub fit: FitConfig,
    pub evaluate: EvalOptions,
    pub turing: SessionOptions,
    pub serve: ServeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: 0,
            out: PathBuf::from("out"),
            synthesis: SynthesisConfig::default(),
            batch: BatchConfig::default(),
            fit: FitConfig::default(),
            evaluate: EvalOptions::default(),
            turing: SessionOptions::default(),
            serve: ServeConfig::default(),
        }
    }
}

/// Global overrides coming from flags or environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn resolve(file: Option<&Path>, o: &Overrides) -> CliResult<Self> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(s) = o.seed {
            cfg.seed = s;
        }
        if let Some(j) = o.jobs {
            cfg.jobs = j;
        }
        if let Some(out) = &o.out {
            cfg.out = out.clone();
        }
        cfg.synthesis.seed = cfg.seed;
        cfg.turing.seed = cfg.seed;
        cfg.synthesis.validate()?;
        Ok(cfg)
    }

    /// The config as recorded in provenance: without `jobs` and `out`,
    /// which do not influence any output byte.
    pub fn recorded(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("jobs");
            m.remove("out");
        }
        v
    }
}
