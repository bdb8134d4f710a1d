use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum SfrlError {
    /// A probability vector or joint failed validation.
    #[error("invalid distribution: {0}")]
    Validation(String),

    /// Mismatched alphabet sizes or axis indices.
    #[error("shape error: {0}")]
    Shape(String),

    /// An iterative solver ran out of iterations before reaching its tolerance.
    #[error("did not converge after {iterations} iterations (gap {gap})")]
    Convergence { iterations: usize, gap: f64 },

    /// A feasibility problem has no solution.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A codebook scan exceeded its point budget.
    #[error("codebook budget of {cap} points exhausted")]
    Budget { cap: usize },

    /// A bitstream could not be parsed.
    #[error("framing error at bit {position}: {reason}")]
    Framing { position: usize, reason: String },

    /// An operation was applied to a value outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A requested construction would be too large.
    #[error("size error: {0}")]
    Size(String),
}

pub type Result<T> = std::result::Result<T, SfrlError>;
