//! Error type shared across the crate.

use std::path::PathBuf;

/// Everything that can go wrong in the pipeline, from file I/O to
/// numerically degenerate training data.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        /// 1-based line number within the file.
        line: usize,
        message: String,
    },

    #[error("{path}: not a mono 16-bit PCM WAV file: {message}")]
    WavFormat { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Domain(String),

    #[error("audio clip too short: need {needed} samples, have {have}")]
    ClipTooShort { needed: usize, have: usize },

    #[error("no sanding event detected: {0}")]
    NoEvent(String),

    #[error("training data is degenerate: {0}")]
    DegenerateData(String),

    #[error("model file {path} has unsupported version {found:?} (expected {expected:?})")]
    ModelVersion {
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("model/data mismatch: {0}")]
    Mismatch(String),

    #[error("synthetic corpus failed its separability check: {0}")]
    Separability(String),

    #[error("segmentation rejected {rejected} of {total} clips (limit {limit_percent}%)")]
    SegmentationQuality {
        rejected: usize,
        total: usize,
        limit_percent: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an `std::io::Error` together with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Shorthand for a parse error at a known line.
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
