//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("record span is {span_secs}s, shorter than the required {required_secs}s")]
    SpanTooShort { span_secs: i64, required_secs: i64 },

    #[error("duplicate tweet id {0}")]
    DuplicateTweetId(String),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("non-finite positions at iteration {iteration}")]
    NumericalBlowup { iteration: usize },

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("no edge with both endpoints labeled")]
    NoLabeledEdges,

    #[error("no labeled edge mass reachable from the focal node")]
    NoLabeledNeighborhood,

    #[error("invalid boundary: {0}")]
    InvalidBoundary(String),

    #[error("boundary regions overlap: {0}")]
    OverlappingRegions(String),

    #[error("degenerate pooled proportion (all successes or all failures)")]
    DegenerateVariance,

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
}
