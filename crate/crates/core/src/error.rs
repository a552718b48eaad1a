use thiserror::Error;

/// Errors raised by evaluators, solvers and analyses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the evaluation domain of `{potential}`")]
    OutOfDomain { potential: String, point: Vec<f64> },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is not critical: |grad u| = {residual:e}")]
    NotCritical { residual: f64 },

    #[error("critical point is not a saddle ({0})")]
    NotSaddle(String),

    #[error("point is not stable: {0}")]
    NotStable(String),

    #[error("component is not periodic: {0}")]
    NotPeriodic(String),

    #[error("probe unusable: {0}")]
    Unusable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_out_of_domain(&self) -> bool {
        matches!(self, Error::OutOfDomain { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
