use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("bad magic in {path}: expected {expected:?}, found {found:?}")]
    BadMagic {
        path: PathBuf,
        expected: [u8; 4],
        found: [u8; 4],
    },

    #[error("unsupported format version {found} in {path} (supported: {supported})")]
    UnsupportedVersion {
        path: PathBuf,
        found: u16,
        supported: u16,
    },

    #[error("truncated payload in {path}: need {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("invalid clip: {0}")]
    InvalidClip(String),

    #[error("manifest error in {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("window of {window_len} samples is longer than the clip ({samples_per_channel} samples per channel)")]
    WindowTooLong {
        window_len: usize,
        samples_per_channel: usize,
    },

    #[error("frequency bin [{lo}, {hi}) exceeds the Nyquist frequency {nyquist}")]
    OutsideNyquist { lo: f64, hi: f64, nyquist: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("AUC undefined: scores cover only one class")]
    SingleClass,

    #[error("non-finite gradient in {tensor}; optimizer step rejected")]
    NonFiniteGradient { tensor: String },

    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
