use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulator and bound machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Two inputs describe inconsistent physical setups.
    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    /// The requested point process would exceed the point budget.
    #[error("point budget exceeded: expected {expected:.3e} points, budget is {budget}")]
    PointBudget { expected: f64, budget: usize },

    /// No samples were collected, so no estimate exists.
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// A moment table breaks its structural invariants.
    #[error("moment table invariant violated: {0}")]
    InvariantViolation(String),

    /// A file could not be parsed.
    #[error("parse error in {path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
