//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("unsupported dimension {0}: expected 2 or 3")]
    Dimension(usize),
    #[error("grid size {0} is not a power of two >= 8")]
    GridSize(usize),
    #[error("wavevector {0:?} is at or beyond the Nyquist limit")]
    Nyquist(Vec<i64>),
    #[error("domain mismatch: expected {expected} field, found {found}")]
    Domain {
        expected: &'static str,
        found: &'static str,
    },
    #[error("multiplier is not finite at wavevector {0:?}")]
    NonFinite(Vec<i64>),
    #[error("spectral coefficient at wavevector {0:?} is not a nonnegative real")]
    NotNonnegative(Vec<i64>),
    #[error("grid or component mismatch: {0}")]
    Mismatch(String),
    #[error("not a field file")]
    BadMagic,
    #[error("unsupported field file version {0} (expected 1)")]
    Version(u32),
    #[error("short payload")]
    ShortPayload,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of a computation, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
