use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is rank deficient: pivot {pivot} of column {column} is below threshold {threshold}")]
    RankDeficient { column: usize, pivot: f64, threshold: f64 },

    #[error("invalid subspace dimension k={k}: must satisfy 1 <= k <= {max}")]
    BadK { k: usize, max: usize },

    #[error("input contains non-finite values")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("eigengap must be positive, got {0}")]
    ZeroGap(f64),

    #[error("invalid shift magnitude {magnitude} for {kind}")]
    BadMagnitude { kind: String, magnitude: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
