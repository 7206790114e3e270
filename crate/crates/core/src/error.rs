use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed edge ({reason})")]
    MalformedLine { line: usize, reason: String },

    #[error("node {0} is isolated after cleaning")]
    IsolatedNode(i64),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(i64, i64),

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("edge ({0}, {1}) not found")]
    EdgeNotFound(usize, usize),

    #[error("removing edges would isolate node {0}")]
    WouldIsolate(usize),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error(
        "lanczos did not converge after {iterations} matvecs (worst residual {worst_residual:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        worst_residual: f64,
    },

    #[error("requested {d} eigenpairs of a {n}-dimensional operator (need d < n)")]
    DimensionTooLarge { d: usize, n: usize },

    #[error("could only remove {found} of {wanted} edges without isolating a node")]
    PositiveExhausted { wanted: usize, found: usize },

    #[error("could only draw {found} of {wanted} distinct non-edges")]
    NegativeExhausted { wanted: usize, found: usize },

    #[error("index {index} out of range for {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("all pair features are zero")]
    DegenerateFeatures,

    #[error("degenerate SBM spec: {0}")]
    DegenerateSpec(String),

    #[error("matrix has zero Frobenius norm")]
    ZeroMatrix,

    #[error("dense lab limited to {max} nodes, got {n}")]
    TooLargeForDense { n: usize, max: usize },

    #[error("katz beta {beta} exceeds 1/spectral radius ({bound:.6})")]
    KatzDivergence { beta: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite loss in logistic regression")]
    NonFinite,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
