use alloc::string::String;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Inputs violate a documented precondition (dimensions, signs, ranges).
    #[error("configuration error: {0}")]
    Config(String),
    /// A run produced NaN or infinity.
    #[error("non-finite value in {block} at iteration {iteration}")]
    NonFinite { iteration: u64, block: &'static str },
    /// An oracle returned data with the wrong shape.
    #[error("oracle dimension mismatch in {channel}: expected {expected}, got {got}")]
    OracleDimension {
        channel: &'static str,
        expected: usize,
        got: usize,
    },
    /// The deterministic reference solver hit its iteration cap.
    #[error("reference solver did not converge after {iterations} iterations (residual {residual:e}, feasibility {feasibility:e})")]
    NotConverged {
        iterations: u64,
        residual: f64,
        feasibility: f64,
    },
    /// The problem has no exact (closed-form) oracle attached.
    #[error("problem has no exact oracle")]
    MissingExactOracle,
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
