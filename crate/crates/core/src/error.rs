//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimMismatch { op: &'static str, detail: String },

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("power iteration did not converge within {iters} iterations (last estimate {estimate:.6e})")]
    NoConvergence { iters: usize, estimate: f64 },

    #[error("{op}: dimension {dim} exceeds guard {guard}")]
    DimGuard {
        op: &'static str,
        dim: usize,
        guard: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("idx file {path}: {kind}")]
    Idx { path: String, kind: IdxErrorKind },

    #[error("record format: {0}")]
    Record(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Distinct failure modes of the IDX parser, kept apart so callers can
/// tell a wrong file from a damaged one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxErrorKind {
    BadMagic { found: u32, expected: u32 },
    Truncated { needed: usize, found: usize },
    CountMismatch { images: usize, labels: usize },
}

impl std::fmt::Display for IdxErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IdxErrorKind::BadMagic { found, expected } => {
                write!(f, "bad magic {found:#010x} (expected {expected:#010x})")
            }
            IdxErrorKind::Truncated { needed, found } => {
                write!(f, "truncated payload: needed {needed} bytes, found {found}")
            }
            IdxErrorKind::CountMismatch { images, labels } => {
                write!(f, "image/label count mismatch: {images} images vs {labels} labels")
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::DimMismatch {
            op,
            detail: detail.into(),
        }
    }
}
