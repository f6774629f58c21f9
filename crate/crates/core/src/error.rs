use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("unsupported spin j = {0}")]
    UnsupportedSpin(f64),

    #[error("invalid projection: {0}")]
    InvalidProjection(String),

    #[error("directions are coplanar (triple product {0:.3e})")]
    Coplanar(f64),

    #[error("quadrature grid of degree {got} is below the required degree {needed}")]
    InsufficientQuadrature { needed: usize, got: usize },

    #[error("inconsistent configuration: {0}")]
    InconsistentSpec(String),

    #[error("no closed-form propagator for this orientation: {0}")]
    NotTabulated(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("rank-deficient design matrix: rank {rank} of {needed}; null space {null_space}")]
    RankDeficient {
        rank: usize,
        needed: usize,
        null_space: String,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
