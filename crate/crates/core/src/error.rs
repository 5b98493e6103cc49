use thiserror::Error;

/// Errors produced by measure construction, quadrature and bound evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("validation error: {0}")]
    Validation(String),

    /// Quadrature did not converge within the configured depth; the best
    /// available value and its error estimate are carried along.
    #[error("numeric failure: {message} (best value {value:e}, error estimate {error_estimate:e})")]
    NumericFailure {
        message: String,
        value: f64,
        error_estimate: f64,
    },

    /// A function required to be convex is not.
    #[error("not convex: {0}")]
    NotConvex(String),

    /// An operation needing a twice-differentiable function was handed one
    /// with kinks; the caller should mollify first.
    #[error("function '{0}' has kinks; mollify it before curvature-based residuals")]
    Kinked(String),

    /// A ratio with a vanishing denominator (affine equality family).
    #[error("degenerate ratio: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code for the CLI: 2 for validation-type errors, 3 for
    /// numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericFailure { .. } => 3,
            _ => 2,
        }
    }
}
