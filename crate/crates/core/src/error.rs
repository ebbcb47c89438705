//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A certification loop hit the configured precision ceiling without
    /// resolving a floor or a comparison.
    #[error("precision exhausted at {bits} bits: {what}")]
    PrecisionExhausted { bits: u32, what: String },

    /// A certified bracket came out wider than the configured tolerance.
    #[error("mixed precision loss: relative width {width:.3e} exceeds tolerance {tol:.3e}")]
    MixedPrecisionLoss { width: f64, tol: f64 },

    /// A log-magnitude bracket could not be formed.
    #[error("height overflow: {0}")]
    HeightOverflow(String),

    /// An orbit or index walked past the computed block range.
    #[error("range exceeded: {0}")]
    RangeExceeded(String),

    /// A comparison against a bracketed quantity could not be certified
    /// in either direction.
    #[error("unresolvable comparison: {0}")]
    UnresolvableComparison(String),

    /// A search or sampling loop ran out of its configured budget.
    #[error("budget exhausted: {0}")]
    BudgetExhausted(String),

    /// The index is not in the minima subsequence S.
    #[error("index {0} is not in the minima set S")]
    NotInS(i64),

    /// An operation that needs exact block heights met a bracketed one.
    #[error("inexact heights: block {0} is bracketed")]
    InexactHeights(i64),

    /// An avalanche hypothesis failed at a specific matrix index.
    #[error("hypothesis violated at index {index}: {reason}")]
    HypothesisViolated { index: usize, reason: String },

    /// Bisection stagnated before reaching the requested tolerance.
    #[error("tolerance unreachable: {0}")]
    ToleranceUnreachable(String),

    /// Shell measures or exhaustion measures are not strictly increasing.
    #[error("monotonicity error: {0}")]
    MonotonicityError(String),

    /// A schedule never reached the regime a demonstration needs.
    #[error("insufficient scale: {0}")]
    InsufficientScale(String),

    /// Configuration validation failure.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for config problems, 3 for
    /// exhausted precision or budget, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::PrecisionExhausted { .. } | Error::BudgetExhausted(_) => 3,
            _ => 1,
        }
    }

    /// Stable machine-readable kind tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "DomainError",
            Error::PrecisionExhausted { .. } => "PrecisionExhausted",
            Error::MixedPrecisionLoss { .. } => "MixedPrecisionLoss",
            Error::HeightOverflow(_) => "HeightOverflow",
            Error::RangeExceeded(_) => "RangeExceeded",
            Error::UnresolvableComparison(_) => "UnresolvableComparison",
            Error::BudgetExhausted(_) => "BudgetExhausted",
            Error::NotInS(_) => "NotInS",
            Error::InexactHeights(_) => "InexactHeights",
            Error::HypothesisViolated { .. } => "HypothesisViolated",
            Error::ToleranceUnreachable(_) => "ToleranceUnreachable",
            Error::MonotonicityError(_) => "MonotonicityError",
            Error::InsufficientScale(_) => "InsufficientScale",
            Error::Config(_) => "ConfigError",
            Error::Io(_) => "IoError",
        }
    }
}
