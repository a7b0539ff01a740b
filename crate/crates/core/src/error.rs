use thiserror::Error;

/// Errors raised by the edge-transfer toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside the schedule window [0, {horizon}]")]
    Domain { t: f64, horizon: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("degenerate point: Gram matrix condition number {condition:e} exceeds limit")]
    DegeneratePoint { condition: f64 },

    #[error("unsupported nested-commutator order {0} for a closed form (only 1 and 2)")]
    UnsupportedOrder(usize),

    #[error("unsupported chain with N = {0} unit cells for the structured decomposition (2..=8)")]
    UnsupportedChain(usize),

    #[error("kappa schedule violates its constraints: {0}")]
    KappaConstraint(String),

    #[error("parameter {index} = {value} outside bounds [{lower}, {upper}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("integrator did not converge after {steps} steps (last change {change:e})")]
    NotConverged { steps: usize, change: f64 },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("self-check failed: {0}")]
    SelfCheck(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the failure comes from invalid input rather than numerics or I/O.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::InvalidParameter(_)
                | Error::DegenerateInput(_)
                | Error::DimensionMismatch { .. }
                | Error::UnsupportedOrder(_)
                | Error::UnsupportedChain(_)
                | Error::KappaConstraint(_)
                | Error::OutOfBounds { .. }
                | Error::IndexOutOfRange { .. }
                | Error::Json(_)
        )
    }

    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotHermitian(_)
                | Error::DegeneratePoint { .. }
                | Error::NotConverged { .. }
                | Error::NotNormalized(_)
                | Error::SelfCheck(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
