use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("large-scale gains must be finite and nonnegative")]
    InvalidGain,
    #[error("transmit power must be finite and nonnegative, got {0}")]
    InvalidPower(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("length mismatch: expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid OFDM parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorError {
    #[error("Gram matrix is singular or too ill-conditioned (condition estimate {condition:e})")]
    SingularGram { condition: f64 },
    #[error("zero-forcing residual {residual:e} exceeds tolerance {tolerance:e}")]
    ZeroForcingResidual { residual: f64, tolerance: f64 },
    #[error("dimension error: {0}")]
    DimensionError(String),
    #[error("noise ratio must be finite and nonnegative, got {0}")]
    InvalidNoiseRatio(f64),
    #[error("empirical MSE needs at least one (y, x) pair")]
    EmptyCollection,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("all large-scale gains are zero")]
    ZeroLargeScale,
    #[error("transmit power must be positive and finite, got {0}")]
    InvalidPower(f64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid configuration: {0}")]
    Config(String),
}
