use std::io;

use thiserror::Error;

/// Errors raised by lesionkit operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A NIfTI header field is missing, inconsistent or unsupported.
    #[error("malformed NIfTI header field `{field}`: {reason}")]
    Format { field: &'static str, reason: String },

    #[error("unsupported dimensionality: {0}D payload (expected 3D)")]
    UnsupportedDimensionality(usize),

    #[error("unknown label code {code} at voxel ({}, {}, {})", index[0], index[1], index[2])]
    UnknownLabel { code: i64, index: [usize; 3] },

    #[error("geometry mismatch: shape {left:?} vs {right:?}")]
    GeometryMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("invalid input: {0}")]
    Validation(String),

    /// A predictor broke its output contract.
    #[error("predictor contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by the filesystem rather than by the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
