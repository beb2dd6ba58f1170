use thiserror::Error;

use crate::collatz::Trajectory;
use crate::tree::JacobsthalTree;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the operation's domain (zero, even θ, θ ≡ 0 mod 3, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no integer seed: ({theta} {op} 1)/3 is not an integer")]
    NoIntegerSeed { theta: String, op: char },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    /// Overflow while iterating a map; carries everything computed so far.
    #[error("arithmetic overflow after {} steps of the trajectory from {}", .0.step_count(), .0.start)]
    TrajectoryOverflow(Box<Trajectory>),

    /// Overflow while growing a tree; carries the tree grown so far.
    #[error("arithmetic overflow while growing the tree ({} nodes built)", .0.len())]
    TreeOverflow(Box<JacobsthalTree>),

    #[error("value {0} is not a node of the tree")]
    NotFound(u64),

    #[error("invalid tree document: {0}")]
    InvalidTree(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn overflow(msg: impl Into<String>) -> Self {
        Error::Overflow(msg.into())
    }

    /// True for every overflow flavour, partial-result variants included.
    pub fn is_overflow(&self) -> bool {
        matches!(
            self,
            Error::Overflow(_) | Error::TrajectoryOverflow(_) | Error::TreeOverflow(_)
        )
    }
}
