//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate qubit index {0}")]
    DuplicateQubit(usize),

    #[error("qubit index {index} out of range 1..={n}")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("control amplitude {value} outside [-1, 1] on channel {channel}")]
    AmplitudeOutOfBounds { channel: String, value: f64 },

    #[error("eigendecomposition did not converge for {dim}x{dim} matrix")]
    EigenFailure { dim: usize },

    #[error("target parameters {alpha:?} outside the sampling domain")]
    OutOfDomain { alpha: Vec<f64> },

    #[error("invalid channel mask: {0}")]
    InvalidMask(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("no built-in circuit template for family {family}; supply a circuit file")]
    UnsupportedTemplate { family: String },

    #[error(
        "non-finite {what} at iteration {iteration}, sample {sample} (alpha {alpha:?}{})",
        .channel.as_ref().map(|c| format!(", channel {c}")).unwrap_or_default()
    )]
    NonFinite {
        what: String,
        iteration: u64,
        sample: usize,
        alpha: Vec<f64>,
        channel: Option<String>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}
