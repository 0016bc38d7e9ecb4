use thiserror::Error;

/// Failure signals shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("integral diverged: {0}")]
    DivergedIntegral(String),
    #[error("integrand poisoned: {fraction:.3e} of samples non-finite")]
    PoisonedIntegrand { fraction: f64 },
    #[error("no sign change in bracket: {0}")]
    BracketFailure(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn contract(msg: impl Into<String>) -> LabError {
    LabError::ContractViolation(msg.into())
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(LabError::ContractViolation(msg()))
    }
}
