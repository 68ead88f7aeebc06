use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while configuring or driving the learners.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor precondition does not hold. The message names the
    /// violated inequality.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("gradient norm {norm} exceeds the configured bound G = {bound}")]
    GradientBound { norm: f64, bound: f64 },

    #[error("bit {bit} exceeds the declared magnitude bound mu = {mu}")]
    BitOutOfRange { bit: f64, mu: f64 },

    #[error("expert cost {cost} outside [0, {upper}] (movement bound broken)")]
    CostOutOfRange { cost: f64, upper: f64 },

    #[error("horizon T = {horizon} exhausted")]
    HorizonExceeded { horizon: usize },

    #[error(
        "horizon T = {horizon} yields no level (K < 1); minimum admissible T is {min_horizon}"
    )]
    HorizonTooShort { horizon: usize, min_horizon: usize },

    #[error("interval [{r}, {s}] invalid for horizon {horizon}")]
    IntervalOutOfRange { r: usize, s: usize, horizon: usize },

    #[error("{path}: row {row}: {msg}")]
    Format {
        path: PathBuf,
        row: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
