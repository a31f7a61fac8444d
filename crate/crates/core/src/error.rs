use thiserror::Error;

/// Failures while reading a case file.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty case text")]
    Empty,
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported field `{field}`: {reason}")]
    Unsupported { field: String, reason: String },
    #[error("missing required field `{0}`")]
    Missing(String),
    #[error("network is disconnected: bus {bus} cannot be reached from bus {root}")]
    Disconnected { root: usize, bus: usize },
    #[error("invalid reference in `{field}`: {message}")]
    Reference { field: String, message: String },
}

/// Errors raised by the dense QP engine before any iteration starts.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("objective matrix is not symmetric (largest asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("objective matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
}

/// Geometric degeneracies in cut construction.
#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum CutError {
    #[error("cannot build a tangent cut through the origin")]
    DegeneratePoint,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("every bus subproblem failed in ADMM iteration {iter}")]
    AllSubproblemsFailed { iter: usize },
    #[error("oracle supports at most 3 buses, network has {0}")]
    OracleTooLarge(usize),
    #[error("oracle found no feasible grid point at resolution {0}")]
    OracleNoFeasiblePoint(usize),
    #[error("reference objective must be positive, got {0}")]
    NonPositiveReference(f64),
}
