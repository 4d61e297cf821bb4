use thiserror::Error;

/// Failures raised while building or transforming number-basis states.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Probability mass beyond the basis cutoff exceeds the tolerated tail.
    #[error("truncation: tail mass {tail:.3e} beyond dim {dim} exceeds tolerance {tol:.1e}")]
    Truncation { tail: f64, dim: usize, tol: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    /// The conditioning event (photon subtraction) has zero probability.
    #[error("zero norm: trace {trace:.3e} after subtraction is below {min:.0e}")]
    ZeroNorm { trace: f64, min: f64 },

    #[error("optimization: {0}")]
    Optimization(String),

    #[error("numerics: {0}")]
    Numerics(String),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
