use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MacError> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants fall into three groups: malformed input (parse and invariant
/// violations), refusals (preconditions, enumeration caps, budgets) and I/O.
/// [`MacError::is_refusal`] tells the two computational groups apart.
#[derive(Debug, Error)]
pub enum MacError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("edge #{index} ({u}, {v}) does not cross the bipartition")]
    Bipartition { index: usize, u: usize, v: usize },
    #[error("edge #{index} ({u}, {v}) is a duplicate")]
    DuplicateEdge { index: usize, u: usize, v: usize },
    #[error("edge #{index} is a self-loop on agent {agent}")]
    SelfLoop { index: usize, agent: usize },
    #[error("learning constant of agent {agent} is {value}, outside [0, 1)")]
    ConstantRange { agent: usize, value: f64 },
    #[error("unknown agent id {agent} (valid ids are 1..={n})")]
    UnknownAgent { agent: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("partition cells overlap on agent {agent}")]
    OverlappingPartition { agent: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("budget {budget} exceeds the candidate pool of {pool} agents")]
    BudgetExceedsPool { budget: usize, pool: usize },
    #[error("enumeration of {subsets} subsets exceeds the cap of {cap}")]
    EnumerationCap { subsets: u128, cap: u128 },
    #[error("instance has no edges")]
    EmptyEdgeSet,
    #[error("dynamics failed to converge within {limit} steps")]
    ConvergenceCap { limit: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl MacError {
    /// True for computational refusals (caps, budgets, preconditions), as
    /// opposed to malformed input or I/O failures.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            MacError::Precondition(_)
                | MacError::BudgetExceedsPool { .. }
                | MacError::EnumerationCap { .. }
                | MacError::EmptyEdgeSet
                | MacError::ConvergenceCap { .. }
                | MacError::OverlappingPartition { .. }
        )
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        MacError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
