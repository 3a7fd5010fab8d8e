use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index set does not belong to the family: {0}")]
    NotInFamily(String),
    #[error("operation mixes incompatible family kinds: {0}")]
    KindMismatch(String),
    #[error("operation unsupported for this family: {0}")]
    Unsupported(String),
    #[error("increment has {k} parts, limit is {max}")]
    TooManyParts { k: usize, max: usize },
    #[error("negative measure {value} for increment {context}")]
    NegativeMeasure { value: f64, context: String },
    #[error("semilattice closure exceeds cap of {cap} sets")]
    ClosureTooLarge { cap: usize },
    #[error("grid of {size} points exceeds cap of {cap}")]
    GridTooLarge { size: usize, cap: usize },
    #[error("set {0} is not contained in the bounding set")]
    OutOfBounds(String),
    #[error("invalid increment: {0}")]
    InvalidIncrement(String),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("kernel is not Gaussian: {0}")]
    NonGaussian(String),
    #[error("no density available for {0}")]
    DensityUnavailable(String),
    #[error("negative OU scale bracket {value} for increment {context}")]
    NegativeSigma { value: f64, context: String },
    #[error("covariance is not positive semidefinite (eigenvalue {0})")]
    NotPsd(f64),
    #[error("history set {0} intersects the increment")]
    HistoryIntersects(String),
    #[error("boundary block is empty")]
    EmptyBoundary,
    #[error("flow is not strictly increasing at position {0}")]
    NonMonotoneFlow(usize),
    #[error("kernel is not homogeneous under the shift (gap {0})")]
    Inhomogeneous(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
