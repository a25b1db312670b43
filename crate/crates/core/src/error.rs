use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph has a cycle; flow polytopes require a DAG")]
    Cyclic,

    #[error("no path from node {source_node} to node {sink}")]
    NoPath { source_node: usize, sink: usize },

    #[error("flow conservation violated at node {node} (imbalance {imbalance:e})")]
    ConservationViolated { node: usize, imbalance: f64 },

    #[error("operation `{op}` is not supported on a {kind} set")]
    Unsupported { op: &'static str, kind: &'static str },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
