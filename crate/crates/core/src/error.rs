use thiserror::Error;

/// Errors raised by the `qid-core` operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("tensor factor index {index} out of range for {factors} factors")]
    IndexOutOfRange { index: usize, factors: usize },

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace {trace} differs from one")]
    TraceNotOne { trace: f64 },

    #[error("decoder violates 0 <= D <= 1 (eigenvalue {eigenvalue:.3e})")]
    DecoderOutOfRange { eigenvalue: f64 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("channel is not trace preserving (Kraus residual {residual:.3e})")]
    NotTracePreserving { residual: f64 },

    #[error("Choi state input reduction is not maximally mixed (deviation {deviation:.3e})")]
    ReductionNotMaximallyMixed { deviation: f64 },

    #[error("reduced operator is singular (min eigenvalue {min_eigenvalue:.3e})")]
    SingularReduction { min_eigenvalue: f64 },

    #[error("balancing failed: {0}")]
    BalancingFailed(String),

    #[error("operator has a strongly negative eigenvalue {eigenvalue:.3e}")]
    StronglyNegative { eigenvalue: f64 },

    #[error("size cap exceeded: {what} = {value} > {cap}")]
    CapExceeded { what: &'static str, value: f64, cap: f64 },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("decoder {index} is not diagonal in the product basis")]
    NonDiagonalDecoder { index: usize },

    #[error("state {index} is not pure (purity {purity})")]
    NotPure { index: usize, purity: f64 },

    #[error("measurement has zero probability")]
    ZeroProbability,

    #[error("serialization: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
