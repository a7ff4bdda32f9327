use std::fmt;

use thiserror::Error;

/// Identifies one constraint of the design problem in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintId {
    /// SINR floor of user `user`.
    Sinr { user: usize },
    /// Beampattern-gain floor of target `target`.
    Beampattern { target: usize },
    /// Total transmit-power budget.
    Power,
    /// Generic linear trace constraint (index into the constraint list).
    Linear { index: usize },
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintId::Sinr { user } => write!(f, "SINR constraint of user {user}"),
            ConstraintId::Beampattern { target } => {
                write!(f, "beampattern-gain constraint of target {target}")
            }
            ConstraintId::Power => write!(f, "transmit-power constraint"),
            ConstraintId::Linear { index } => write!(f, "linear constraint {index}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible: {constraint} cannot be met (best relative slack {slack:.4e})")]
    Infeasible { constraint: ConstraintId, slack: f64 },

    #[error("analog beamformer is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
