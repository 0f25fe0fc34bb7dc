use thiserror::Error;

use crate::model::{EdgeId, VertexId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown vertex {0}")]
    UnknownVertex(VertexId),

    #[error("unknown edge {0}")]
    UnknownEdge(EdgeId),

    #[error("no edge from {tail} to {head}")]
    MissingEdge { tail: VertexId, head: VertexId },

    #[error("route is infeasible: {0}")]
    InfeasibleRoute(String),

    #[error("{what} cap of {cap} exceeded")]
    CapExceeded { what: &'static str, cap: u64 },

    #[error("instance too large for oracle: {states} states (limit {limit})")]
    OracleTooLarge { states: u64, limit: u64 },

    #[error("route reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("no coordinates for vertex {0}")]
    NoCoordinates(VertexId),

    #[error("corrupt hierarchy cache: {0}")]
    CorruptCache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
