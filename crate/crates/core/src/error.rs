use thiserror::Error;

use crate::ring::NodeIndex;

/// Errors raised by the structural queries and the two protocol phases.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("empty configuration")]
    EmptyConfiguration,

    #[error("inter-distance undefined: fewer than two occupied nodes")]
    Undefined,

    #[error("no robot here: node {0} is empty")]
    NoRobot(NodeIndex),

    #[error("node {node} out of range for a ring of {n} nodes")]
    NodeOutOfRange { node: NodeIndex, n: usize },

    #[error("incomparable views: sequence lengths {0} and {1}")]
    Incomparable(usize, usize),

    #[error("empty candidate set")]
    EmptyCandidates,

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("phase-1 precondition violated: {0}")]
    Phase1Precondition(String),

    #[error("protocol stuck: {0}")]
    ProtocolStuck(String),

    #[error("stale classification: {0}")]
    StaleClassification(String),

    #[error("cannot parse configuration: {0}")]
    Parse(String),
}
