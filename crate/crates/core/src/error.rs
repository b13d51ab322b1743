use thiserror::Error;

/// Errors surfaced by the library. The CLI maps these onto its exit-code
/// contract: validation/infeasible input -> 2, violated preconditions -> 3,
/// failed checks and internal diagnostics -> 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("family is not a K-frame: {0}")]
    NotKFrame(String),

    #[error("undefined relative residual: {0}")]
    UndefinedResidual(String),

    /// Internal inconsistency, e.g. the three Douglas criteria disagree.
    /// Signals a tolerance or rank-decision bug, never a bad instance.
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
