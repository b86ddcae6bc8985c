use thiserror::Error;

/// Errors raised by the design engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error("invalid block size k={0}: need k >= 2")]
    InvalidBlockSize(usize),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("covariance matrix is singular; use the projector form for singular covariances")]
    SingularCovariance,

    #[error("degenerate model: Z'V^-1 Z is singular")]
    DegenerateModel,

    #[error("infeasible: {reason}")]
    Infeasible {
        reason: String,
        /// Smallest number of blocks known to work, when one applies.
        smallest_b: Option<usize>,
    },

    #[error("budget exceeded: {required} evaluations required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
}

impl DesignError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        DesignError::InvalidParameters(msg.into())
    }

    pub(crate) fn infeasible(reason: impl Into<String>) -> Self {
        DesignError::Infeasible {
            reason: reason.into(),
            smallest_b: None,
        }
    }
}

pub type Result<T> = std::result::Result<T, DesignError>;
