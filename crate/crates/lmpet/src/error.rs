//! Crate-wide error type.

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scanner config: {0}")]
    InvalidConfig(String),

    #[error("crystal index {index} out of range (scanner has {n_crystals} crystals)")]
    CrystalOutOfRange { index: u32, n_crystals: u32 },

    #[error("TOF bin {bin} out of range (scanner has {n_bins} bins)")]
    TofBinOutOfRange { bin: u32, n_bins: u32 },

    #[error("degenerate LOR: crystal {0} paired with itself")]
    DegenerateLor(u32),

    #[error("invalid event at index {index}: {source}")]
    InvalidEvent {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: bad file format: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format { path: path.into(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
