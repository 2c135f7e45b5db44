use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IdsError {
    /// A problem size exceeded a configured cap.
    #[error("size cap exceeded: {what} = {size} > cap {cap}")]
    SizeCap { what: &'static str, size: u128, cap: u128 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The operation was called on an input it does not accept.
    #[error("usage error: {0}")]
    Usage(String),

    /// Factorization kept hitting near-zero pivots after all retry shifts.
    #[error("numerical breakdown in inertia count at energy {energy} after {retries} retries")]
    NumericalBreakdown { energy: f64, retries: usize },
}

impl IdsError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        IdsError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, IdsError>;
