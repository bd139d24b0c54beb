use std::io;

use thiserror::Error;

/// Errors raised by the photonstats library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectrum has no components")]
    EmptySpectrum,

    #[error("total spectral area is zero")]
    ZeroArea,

    #[error("grid must be strictly increasing")]
    UnsortedGrid,

    #[error("unknown channel {0}")]
    UnknownChannel(u8),

    #[error("no sync tags on channel {0}")]
    NoSyncTags(u8),

    #[error("too few peaks for normalization: {found} far peaks, need at least {needed}")]
    TooFewPeaks { found: usize, needed: usize },

    #[error("fringe undersampled: {points} points in a period, need at least {needed}")]
    Undersampled { points: usize, needed: usize },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("model `{0}` is already registered")]
    DuplicateModel(String),

    #[error("fit problem is invalid: {0}")]
    InvalidFit(String),

    #[error("operation requires pulsed drive")]
    NotPulsed,

    #[error("overlapping scan windows: coarse step {step} s is shorter than fine window {window} s")]
    OverlappingWindows { step: f64, window: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
