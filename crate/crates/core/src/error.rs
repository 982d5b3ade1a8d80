use crate::diagram::VertexId;

/// Errors raised by the library.
///
/// Solvers that can meet an inconsistent system report it in their
/// [`SolveReport`](crate::harmonic::SolveReport) instead of failing; the
/// variants here are for inputs that violate a precondition.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("vertex {0} is not in the diagram")]
    NoSuchVertex(VertexId),
    #[error("vertex {0} has zero total conductance")]
    IsolatedVertex(VertexId),
    #[error("invalid diagram: {0}")]
    InvalidDiagram(String),
    #[error("graph is disconnected: vertex {0} is unreachable from the root")]
    Disconnected(usize),
    #[error("path is not self-avoiding: vertex {0} repeats")]
    NotSelfAvoiding(usize),
    #[error("function is not harmonic on the interior (worst residual {residual:.3e} at level {level})")]
    NotHarmonic { level: usize, residual: f64 },
    #[error("compatibility fails at level {level} (residual {residual:.3e})")]
    Incompatible { level: usize, residual: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
