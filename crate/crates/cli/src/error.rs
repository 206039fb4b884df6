use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] tumorsynth_core::Error),

    #[error("manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} cases failed: {first}")]
    Batch { failed: usize, total: usize, first: String },

    #[error("server: {0}")]
    Server(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn manifest(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Manifest {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(tumorsynth_core::Error::Session(e)) => e.kind(),
            CliError::Core(e) => e.kind(),
            CliError::Manifest { .. } => "manifest",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Batch { .. } => "batch",
            CliError::Server(_) => "server",
        }
    }
}

/// Machine-readable failure written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub error: &'a str,
    pub message: String,
    pub command: Option<&'a str>,
    pub exit_code: i32,
}
