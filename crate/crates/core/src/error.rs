use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{topology} needs at least {min} nodes, got {n}")]
    TopologyTooSmall {
        topology: &'static str,
        min: usize,
        n: usize,
    },
    #[error("edge probability {0} is outside (0, 1]")]
    InvalidProbability(f64),
    #[error("no connected sample after {attempts} attempts (n = {n}, p = {p})")]
    ConnectivityExhausted { n: usize, p: f64, attempts: usize },
    #[error("{0} requires a random generator; use erdos_renyi_connected")]
    RandomTopology(&'static str),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("initial counts sum to {got}, expected {n}")]
    CountMismatch { n: usize, got: usize },
    #[error("graph has {graph} nodes but state has {state}")]
    SizeMismatch { graph: usize, state: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("tokens already met")]
    AlreadyMet,
    #[error("joint distribution invalid at ({x}, {y}): {msg}")]
    JointDistribution { x: usize, y: usize, msg: String },
    #[error("meeting trial exceeded {cap} ticks from ({x}, {y})")]
    TickCapExceeded { x: usize, y: usize, cap: u64 },
    #[error("linear solve failed: {0}")]
    Singular(String),
    #[error("no hidden vertex found")]
    NoHiddenVertex,
    #[error("node {0} is not a hidden vertex")]
    NotHidden(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
