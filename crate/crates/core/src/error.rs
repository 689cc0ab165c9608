use thiserror::Error;

use crate::solver::SolveReport;

/// Structural problems found while building a graph from an edge list.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("graph has no vertices")]
    Empty,
    #[error("self-loop on vertex {vertex}")]
    SelfLoop { vertex: usize },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: usize, v: usize },
    #[error("edge ({u}, {v}) has non-positive or non-finite weight {weight}")]
    BadWeight { u: usize, v: usize, weight: f64 },
    #[error("vertex id {id} out of range for {n} vertices")]
    OutOfRange { id: usize, n: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Validation(#[from] ValidationError),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid vertex set: {0}")]
    InvalidSet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("right-hand side is not orthogonal to the all-ones vector (sum = {sum:e})")]
    NotOrthogonal { sum: f64 },

    #[error(
        "solver did not converge after {} iterations (residual {:e}, threshold {:e})",
        .0.iterations, .0.residual_2norm, .0.residual_threshold
    )]
    NotConverged(SolveReport),

    #[error("{what}: requested {requested}, limit {limit}{hint}")]
    CapExceeded {
        what: &'static str,
        requested: u128,
        limit: u128,
        hint: &'static str,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{truncated} of {trials} walks exceeded {max_steps} steps")]
    WalkTruncated {
        truncated: u64,
        trials: u64,
        max_steps: u64,
    },

    #[error("stopped by the caller after step {step}")]
    Cancelled { step: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("greedy step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// The underlying error, looking through step context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn at_step(step: usize) -> impl FnOnce(Error) -> Error {
        move |source| Error::AtStep {
            step,
            source: Box::new(source),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
