use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input carries no usable signal (constant waveform, zero-variance profile).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate filter: every tap is zero after windowing")]
    DegenerateFilter,

    #[error("filter {filter_rows}x{filter_cols} exceeds 4x the image size {rows}x{cols}")]
    FilterTooLarge {
        filter_rows: usize,
        filter_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("filter bank is empty")]
    EmptyBank,

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("axis hypothesis (with its sampling margin) leaves the map")]
    AxisOutOfBounds,

    #[error("missing predictions for ids {0:?}")]
    MissingPrediction(Vec<u64>),

    #[error("malformed {kind} data: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            kind,
            reason: reason.into(),
        }
    }
}
