use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("length mismatch: {times} times vs {values} values")]
    LengthMismatch { times: usize, values: usize },

    #[error("times must be strictly increasing (violated at index {index})")]
    NonIncreasingTimes { index: usize },

    #[error("singular least-squares design: all times are equal")]
    SingularDesign,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {time} is outside the drift domain")]
    OutsideDrift { time: f64 },

    #[error("degenerate zero variance in {context}")]
    ZeroVariance { context: String },

    #[error("degenerate (zero) fluctuation at scale {scale}")]
    DegenerateFluctuation { scale: usize },

    #[error("circulant embedding has eigenvalue {min_eigenvalue:e} (max {max_eigenvalue:e}) and n = {n} exceeds the Cholesky limit {limit}")]
    EmbeddingFailed {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
        n: usize,
        limit: usize,
    },

    #[error("Cholesky factorisation of the covariance failed for n = {n}")]
    CholeskyFailed { n: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn zero_variance(context: impl Into<String>) -> Self {
        Error::ZeroVariance {
            context: context.into(),
        }
    }
}
