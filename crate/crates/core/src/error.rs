use thiserror::Error;

/// Errors raised by state validation, measurement and the optimizers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QcorrError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid subsystem layout: {0}")]
    InvalidLayout(String),
    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NonPositive { min_eigenvalue: f64 },
    #[error("trace is {trace:.12}, expected 1")]
    TraceError { trace: f64 },
    #[error("keep set is empty")]
    EmptyKeepSet,
    #[error("measured set is empty")]
    EmptyMeasuredSet,
    #[error("subsystem index {index} out of range for {count} subsystems")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("invalid subsystem subset: {0}")]
    InvalidSubset(String),
    #[error("basis does not match measured subsystems: {0}")]
    BasisDimensionMismatch(String),
    #[error("support error: {0}")]
    SupportError(String),
    #[error("state is not classical (residual {residual:.3e})")]
    NotClassical { residual: f64 },
    #[error("negative arguments: {0}")]
    NegativeArguments(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("grid of {evaluations} points exceeds the limit of {limit}")]
    GridTooLarge { evaluations: u128, limit: u128 },
    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),
}

pub type Result<T> = std::result::Result<T, QcorrError>;
