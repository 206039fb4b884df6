//! Reproducibility records: `run.json` per invocation and a
//! `<file>.provenance.json` sidecar next to every artifact.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const TOOL: &str = "tumorsynth";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Enough to re-run the producing command: the canonical command line
/// (run it with `--out` pointing at this directory) and the resolved config.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub seed: u64,
    pub config: Value,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    artifact: &'a str,
    run: &'a RunRecord,
    details: &'a Value,
}

#[derive(Serialize)]
struct RunFile<'a> {
    #[serde(flatten)]
    run: &'a RunRecord,
    outputs: &'a [String],
    summary: &'a Value,
}

pub struct Recorder {
    pub record: RunRecord,
    pub out: PathBuf,
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(tumorsynth_core::Error::from)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".provenance.json");
    artifact.with_file_name(name)
}

impl Recorder {
    /// `args` is the subcommand and its arguments; the global seed is
    /// always made explicit.
    pub fn new(cfg: &RunConfig, args: Vec<String>) -> CliResult<Self> {
        std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
        let mut command = vec![TOOL.to_string(), "--seed".into(), cfg.seed.to_string()];
        command.extend(args);
        Ok(Recorder {
            record: RunRecord {
                tool: TOOL,
                version: VERSION,
                command,
                seed: cfg.seed,
                config: cfg.recorded(),
            },
            out: cfg.out.clone(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn sidecar(&self, artifact: &Path, details: Value) -> CliResult<()> {
        let name = artifact.file_name().unwrap_or_default().to_string_lossy();
        write_json(
            &sidecar_path(artifact),
            &Sidecar {
                artifact: &name,
                run: &self.record,
                details: &details,
            },
        )
    }

    /// Writes `bytes` and its sidecar.
    pub fn artifact(&self, name: &str, bytes: &[u8], details: Value) -> CliResult<PathBuf> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.sidecar(&path, details)?;
        Ok(path)
    }

    pub fn finish(&self, outputs: &[PathBuf], summary: &Value) -> CliResult<()> {
        let names: Vec<String> = outputs
            .iter()
            .map(|p| p.strip_prefix(&self.out).unwrap_or(p).to_string_lossy().into_owned())
            .collect();
        write_json(
            &self.path("run.json"),
            &RunFile {
                run: &self.record,
                outputs: &names,
                summary,
            },
        )
    }
}

/// Path rendered for a command line.
pub fn arg(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}
