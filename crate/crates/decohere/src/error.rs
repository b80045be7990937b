use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state specification: {0}")]
    InvalidStateSpec(String),
    #[error("amplitude vector is not normalized (deviation {0:.3e})")]
    NotNormalized(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace deviates from one by {0:.3e}")]
    TraceNotOne(f64),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:.3e})")]
    NotPositiveSemidefinite(f64),
    #[error("qubit label {q} out of range for {n} qubits")]
    QubitOutOfRange { q: usize, n: usize },
    #[error("duplicate qubit label {0}")]
    DuplicateQubit(usize),
    #[error("keep set must be non-empty")]
    EmptyKeepSet,
    #[error("projection has zero norm (state orthogonal to |+> on the target qubit)")]
    ZeroNormProjection,
    #[error("parameter must be non-negative: {0}")]
    NegativeParameter(String),
    #[error("register size {0} exceeds the 10-qubit limit")]
    RegisterTooLarge(usize),
    #[error("unsupported register size for this operation: {0}")]
    UnsupportedRegister(String),
    #[error("solver failed to converge: {0}")]
    NonConvergence(String),
    #[error("incomplete count table: {0}")]
    IncompleteCountTable(String),
    #[error("not enough usable points for a fit (have {have}, need {need})")]
    InsufficientFitPoints { have: usize, need: usize },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
