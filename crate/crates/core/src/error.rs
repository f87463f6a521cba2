use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("image is {width}x{height}, need at least {min}x{min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },

    #[error("unknown operator `{0}`")]
    UnknownOperator(String),

    #[error("invalid Gaussian kernel size {0}: must be odd and in 3..=15")]
    InvalidKernelSize(usize),

    #[error("histogram has fewer than two populated bins")]
    DegenerateHistogram,

    #[error("value {value} out of range {range}")]
    OutOfRange { value: i64, range: &'static str },

    #[error("invalid detection parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("nothing to aggregate")]
    EmptyInput,

    #[error("invalid image buffer: {0}")]
    InvalidImage(String),
}
