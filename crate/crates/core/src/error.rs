use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("target beat frequency {beat_hz:.1} Hz is not below the fast-time Nyquist limit {nyquist_hz:.1} Hz")]
    UnrepresentableTarget { beat_hz: f64, nyquist_hz: f64 },

    #[error("signal of {len} samples is shorter than the required {required}")]
    SignalTooShort { len: usize, required: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("no direction has at least two maxima; the signal has no usable extrema")]
    NoExtrema,

    #[error("every instantaneous-frequency sample is masked")]
    AllMasked,

    #[error("no signature found: no IMF satisfies the proximity criteria")]
    NoSignatureFound,

    #[error("config error: {0}")]
    Config(String),

    #[error("capture format error in {path}: {reason}")]
    Capture { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// Process exit status used by the `mdkit` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } => 2,
            Error::Capture { .. } => 3,
            Error::NoSignatureFound => 4,
            _ => 1,
        }
    }
}
