use thiserror::Error;

use crate::model::{Stage, Violation};

/// Errors raised by model construction, policy queries, evaluation and solving.
#[derive(Debug, Error)]
pub enum Error {
    /// The model description violates an invariant. Carries the first violation found.
    #[error("invalid model: {0}")]
    Validation(Violation),

    /// Deriving or windowing a model would leave no decision epoch.
    #[error("horizon error: {0}")]
    Horizon(String),

    /// A stage argument falls outside the range an operation accepts.
    #[error("stage error: {0}")]
    Stage(String),

    /// A combination of policies lacks a branch for an initial state that carries mass.
    #[error("no branch policy for initial state `{0}`")]
    MissingBranch(String),

    /// Exhaustive enumeration would exceed the configured cap.
    #[error("enumeration exceeds cap of {cap} {what}")]
    Explosion { what: &'static str, cap: usize },

    /// An augmented outcome does not describe a realization of the model.
    #[error("inconsistent outcome: {0}")]
    InconsistentOutcome(String),

    /// A policy returned something that is not a distribution on the available actions.
    #[error("invalid decision at stage {stage}, state `{state}`: {reason}")]
    InvalidDecision {
        stage: Stage,
        state: String,
        reason: String,
    },

    /// A policy document does not match the model it is loaded against.
    #[error("policy error: {0}")]
    Policy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Internal consistency failure, e.g. an empty dominance selection set.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
