use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("surface projection did not converge: |d| = {residual:e} after {iterations} iterations")]
    NonConvergent { residual: f64, iterations: usize },

    #[error("surface sampling exhausted after {attempts} consecutive rejected attempts")]
    SamplingExhausted { attempts: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("duplicate contact index {0}")]
    DuplicateContact(String),

    #[error("invalid contact index {0}")]
    InvalidIndex(String),

    #[error("invalid hand model: {0}")]
    InvalidModel(String),

    #[error("invalid contact set: {0}")]
    InvalidContacts(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear program failed: {0}")]
    LpFailure(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
