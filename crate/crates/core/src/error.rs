//! Shared error type for the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid volume header: {0}")]
    Header(String),

    #[error("volume data length {got} does not match dims {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("confidence value {value} at voxel {index} outside [0, 1]")]
    ConfidenceRange { index: usize, value: f32 },

    #[error("mask is not binary: voxel {index} has value {value}")]
    NonBinaryMask { index: usize, value: f32 },

    #[error("volume grids do not match: {0}")]
    GridMismatch(String),

    #[error("volume is constant; no threshold separates two classes")]
    ConstantVolume,

    #[error("both classes must be present")]
    SingleClass,

    #[error("operating point unreachable: {0}")]
    UnreachableOperatingPoint(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
