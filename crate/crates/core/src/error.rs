use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("ill-conditioned operator (condition number {cond:.3e} exceeds {limit:.1e})")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("majorant vanishes on a nonzero pair of vectors")]
    DegenerateFamily,

    #[error("singular values are too close to compare reliably (relative gap {gap:.3e})")]
    DegenerateSingularValues { gap: f64 },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
