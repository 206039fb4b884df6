use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported NIfTI file: {0}")]
    UnsupportedFormat(String),

    #[error("malformed NIfTI file: {0}")]
    MalformedFile(String),

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("index {index} out of bounds for axis {axis} (len {len})")]
    OutOfBounds { axis: char, index: usize, len: usize },

    #[error("empty mask: {0}")]
    EmptyMask(&'static str),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("neighborhood too small: {0}")]
    NeighborhoodTooSmall(String),

    #[error("stratum {stratum} has no mass under the size distribution after {attempts} draws")]
    StratumExhausted { stratum: usize, attempts: usize },

    #[error("tumor lies entirely outside the volume")]
    TumorOutsideVolume,

    #[error("no tumor could be placed without overlap after {0} attempts")]
    PlacementFailed(usize),

    #[error("stats model: {0}")]
    Model(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("png encoding failed: {0}")]
    Png(String),

    #[error("session: {0}")]
    Session(#[from] crate::turing::SessionError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::UnsupportedFormat(_) => "unsupported_format",
            Error::MalformedFile(_) => "malformed_file",
            Error::InvalidVolume(_) => "invalid_volume",
            Error::GeometryMismatch(_) => "geometry_mismatch",
            Error::OutOfBounds { .. } => "out_of_bounds",
            Error::EmptyMask(_) => "empty_mask",
            Error::InsufficientData(_) => "insufficient_data",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NeighborhoodTooSmall(_) => "neighborhood_too_small",
            Error::StratumExhausted { .. } => "stratum_exhausted",
            Error::TumorOutsideVolume => "tumor_outside_volume",
            Error::PlacementFailed(_) => "placement_failed",
            Error::Model(_) => "model",
            Error::Json(_) => "json",
            Error::Png(_) => "png",
            Error::Session(_) => "session",
        }
    }
}
