//! Crate-wide error type.

/// Errors reported by the toolkit.
///
/// Numerical divergence of a norm is *not* an error; see
/// [`crate::norms::NormValue`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input data violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter lies outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A resolution or size argument is unusable (zero, not a power of two, ...).
    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    /// Adaptive quadrature failed to meet its tolerance within budget.
    #[error("accuracy failure: {0}")]
    AccuracyFailure(String),

    /// Grids of two operands do not match where they must.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The time stepper detected unbounded growth.
    #[error("blow-up detected: {0}")]
    BlowUp(String),

    /// A divergent norm reached an operation that needs a finite value.
    #[error("divergent norm: {0}")]
    DivergentNorm(String),
}

pub type Result<T> = std::result::Result<T, Error>;
