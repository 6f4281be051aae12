use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("generated instance {index} of `{family}` is not {expected}")]
    Generation { family: String, index: usize, expected: String },

    #[error(transparent)]
    Core(#[from] ratiolab_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, VerifierError>;
