use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state left the domain where the axisymmetric drift is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rejection rate too high: {attempts} attempts yielded only {retained} of {requested} trajectories")]
    ExcessiveRejection {
        attempts: u64,
        retained: usize,
        requested: usize,
    },

    #[error("time index {index} out of range (valid 0..={max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("model diverged: {0}")]
    ModelDivergence(String),

    #[error("degenerate variance {0}")]
    DegenerateVariance(f64),

    #[error("trajectory {index} has zero total displacement")]
    DegenerateDenominator { index: usize },

    #[error("reconstruction failed at terminal {index}: {source}")]
    Reconstruction {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trial with seed {seed} at s={s} failed: {source}")]
    Trial {
        s: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("corrupt file {path}: {reason}")]
    Corruption { path: PathBuf, reason: String },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
