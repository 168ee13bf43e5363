use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = ContractError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ContractError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("action index {index} out of range ({count} actions)")]
    ActionOutOfRange { index: usize, count: usize },

    #[error("signal index {index} out of range ({count} signals)")]
    SignalOutOfRange { index: usize, count: usize },

    #[error("invalid setting: {0}")]
    InvalidSetting(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("action {0} cannot be incentivized")]
    Infeasible(usize),

    #[error("enumeration over {signals} signals exceeds the limit of {limit}")]
    EnumerationTooLarge { signals: usize, limit: usize },

    #[error("randomized search over {signals} signals exceeds the limit of {limit}")]
    SearchGuardExceeded { signals: usize, limit: usize },

    #[error(transparent)]
    Lp(#[from] LpError),
}
