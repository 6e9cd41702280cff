use thiserror::Error;

/// Errors raised by the frame-function laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("projectors are not orthogonal: trace product {trace} exceeds {tolerance}")]
    NotOrthogonal { trace: f64, tolerance: f64 },

    #[error("invalid effect: eigenvalues {lower} and {upper} must lie in [0, 1]")]
    InvalidEffect { lower: f64, upper: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("normal equations are numerically degenerate (pivot {pivot:e})")]
    Degenerate { pivot: f64 },
}

pub type Result<T> = std::result::Result<T, LabError>;
