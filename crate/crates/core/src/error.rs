use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("stage {stage}: state {state} has positive mass at stage {stage}+1 but none at stage {stage}")]
    NotAbsolutelyContinuous { stage: usize, state: usize },

    #[error("kernel {stage} does not leave its target invariant (max defect {defect:.3e})")]
    NotInvariant { stage: usize, defect: f64 },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("kernel {stage} leaks mass {leak:.3e} out of block {block}")]
    LeakyBlock { stage: usize, block: usize, leak: f64 },

    #[error("distribution has empty support")]
    EmptySupport,

    #[error("all particle weights are zero at stage {stage}")]
    ParticleDeath { stage: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid_param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
