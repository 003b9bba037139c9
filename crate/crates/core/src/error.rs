use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DcError {
    /// φ₁ evaluated to +∞ at the iterate.
    #[error("iterate is outside dom(phi1)")]
    Infeasible,

    #[error("active-piece enumeration exceeded the cap of {cap} pieces")]
    EnumerationOverflow { cap: usize },

    #[error("no singleton active gradient after {retries} perturbations")]
    RetryExhausted { retries: usize },

    #[error("subproblem solver failed at iteration {iteration}: {reason}")]
    Subproblem { iteration: usize, reason: String },

    #[error("iterate norm {norm:e} exceeded the boundedness ceiling {ceiling:e}")]
    Unbounded { norm: f64, ceiling: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl DcError {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            DcError::Subproblem { reason, .. } => DcError::Subproblem { iteration, reason },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, DcError>;
