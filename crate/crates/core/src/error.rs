use thiserror::Error;

use crate::minor::Violation;
use crate::trace::RunTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("graph is disconnected: vertex {unreachable} is unreachable from vertex {from}")]
    Disconnected { from: usize, unreachable: usize },

    #[error("invalid terminal partition ({} violation(s), first: {})", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidPartition(Vec<Violation>),

    #[error("round guard exceeded after {rounds} rounds with {uncovered} vertices still uncovered")]
    RoundGuardExceeded {
        rounds: u64,
        uncovered: usize,
        partial: Box<RunTrace>,
    },

    /// The canonical path between the pair passes through another terminal;
    /// analyze the terminal-free sub-pairs instead.
    #[error("canonical path between terminals {from} and {to} passes through terminal {interior}; reduce via the consecutive terminal-free pairs")]
    InteriorTerminal {
        from: usize,
        to: usize,
        interior: usize,
    },

    #[error("inconsistent trace: {0}")]
    InconsistentTrace(String),

    #[error("instance has {vertices} vertices but the enumeration cap is {cap}")]
    CapExceeded { vertices: usize, cap: usize },

    #[error("coin process exceeded {0} tosses; failure probability too close to 1/2")]
    CoinGuardExceeded(u64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
