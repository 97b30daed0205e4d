//! Shared error type for the whole toolkit.

use thiserror::Error;

/// Errors surfaced by parsers, validators, solvers and encoders.
///
/// Budget overruns are deliberately distinct from negative answers: a solver
/// that ran out of its enumeration or table budget has *not* decided the
/// instance.
#[derive(Debug, Error)]
pub enum SprError {
    /// Malformed input (bad JSON, unparsable numbers, missing files).
    #[error("parse error: {0}")]
    Parse(String),

    /// Structurally invalid instance; one line per violated invariant.
    #[error("invalid instance:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    /// A precondition of an operation was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The configured search/table budget would be exceeded.
    #[error("budget exceeded: {0}")]
    Budget(String),
}

pub type Result<T> = std::result::Result<T, SprError>;
