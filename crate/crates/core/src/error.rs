use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("array length {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("band [{lo}, {hi}] contains no point of the wavenumber ladder")]
    EmptyBand { lo: f64, hi: f64 },

    #[error("harmonic index {index} outside tabulated range [{lo}, {hi}]")]
    HarmonicOutOfRange { index: i64, lo: i64, hi: i64 },

    #[error("high-pass filter at k = {k_lo} removed every mode")]
    EmptyFilter { k_lo: f64 },

    #[error("growth fit needs at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("eigensolver failed for frequency {frequency}, L = {length}, M = {harmonics}")]
    EigenSolver {
        frequency: f64,
        length: f64,
        harmonics: usize,
    },

    #[error("monodromy integration over L = {length} not converged after {steps} steps (change {change:e})")]
    MonodromyNotConverged {
        length: f64,
        steps: usize,
        change: f64,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
