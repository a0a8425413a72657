use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by graph construction, learning, the game environments
/// and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge list is empty")]
    EmptyEdgeList,

    #[error("source and sink must differ (both are {0})")]
    SourceIsSink(usize),

    #[error("vertex {vertex} out of range for a graph with {vertex_count} vertices")]
    VertexOutOfRange { vertex: usize, vertex_count: usize },

    #[error("graph contains a directed cycle")]
    CycleDetected,

    #[error("edge {edge} ({tail} -> {head}) does not lie on any source-sink path")]
    UnreachableEdge {
        edge: usize,
        tail: usize,
        head: usize,
    },

    #[error("bad endpoints: {0}")]
    BadEndpoints(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("dimension mismatch: expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no sampling mass left at vertex {vertex}")]
    NumericalDegeneracy { vertex: usize },

    #[error("path count {count} exceeds enumeration cap {cap}")]
    TooManyPaths { count: String, cap: u64 },

    #[error("edge {edge} out of range for {edge_count} edges")]
    EdgeOutOfRange { edge: usize, edge_count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent feedback: {0}")]
    InconsistentFeedback(String),

    #[error("loss {loss} on edge {edge} is outside [0, 1]")]
    LossOutOfRange { edge: usize, loss: f64 },

    #[error("bad allocation: {0}")]
    BadAllocation(String),

    #[error("incoherent search: {0}")]
    IncoherentSearch(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
