//! Error handling shared across the crate.

use std::fmt;

/// Errors produced by meshing, assembly, solvers and I/O.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter or field violates a documented precondition.
    InvalidArgument(String),
    /// Malformed text input, reported with a 1-based line number.
    Parse { line: usize, message: String },
    /// An iterative linear solve did not reach the requested tolerance.
    SolverFailure { residual: f64, iterations: usize },
    /// The objective or its gradient became non-finite at a feasible point.
    NonFinite(String),
    /// Filesystem failure, wrapped with path context.
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io(format!("{}: {}", path.display(), err))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::SolverFailure {
                residual,
                iterations,
            } => write!(
                f,
                "linear solver did not converge: relative residual {residual:.3e} after {iterations} iterations"
            ),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
