use thiserror::Error;

/// Errors raised by the operator, channel and diagnostics layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |A - A*| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("non-finite entry in operator")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("operator is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e} below -{tolerance:e}")]
    NotPositive { min_eigenvalue: f64, tolerance: f64 },

    #[error("operator is not a state: trace {trace} differs from 1")]
    NotNormalized { trace: f64 },

    #[error("eigensolver did not converge for a {dim}x{dim} matrix (max |entry| = {max_abs:e}, Frobenius norm = {frobenius:e})")]
    EigenNonConvergence { dim: usize, max_abs: f64, frobenius: f64 },

    #[error("spectral function undefined at eigenvalue {eigenvalue:e}")]
    FunctionUndefined { eigenvalue: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("channel is not trace preserving: ||sum K*K - I|| = {deficit:e}")]
    NotTracePreserving { deficit: f64 },

    #[error("undefined difference involving +inf")]
    InfiniteDifference,

    #[error("domination fails at n = {n}: {inequality} (smallest eigenvalue {min_eigenvalue:e})")]
    Domination { n: usize, inequality: String, min_eigenvalue: f64 },

    #[error("truncation index {m} is below the multiplicity threshold m_* = {m_star}")]
    BelowStableIndex { m: usize, m_star: usize },

    #[error("projector schedule: {0}")]
    Schedule(String),
}

pub type Result<T> = std::result::Result<T, Error>;
