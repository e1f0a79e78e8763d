use thiserror::Error;

/// Errors raised by scalar arithmetic and the algorithms built on it.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("pole: {0}")]
    Pole(String),
    #[error("q-adic pole at Q=0: {0}")]
    QAdicPole(String),
    #[error("insufficient q-adic order: {0}")]
    InsufficientOrder(String),
    #[error("expansion failure: {0}")]
    Expansion(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Errors raised by the series, operator and check layers.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("window underflow: {0}")]
    Window(String),
    #[error("degenerate eigenvalue: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("kernel pole: {0}")]
    KernelPole(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("{0}")]
    Other(String),
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
