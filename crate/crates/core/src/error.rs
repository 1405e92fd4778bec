use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    Contract(String),

    /// A special-function evaluation left the representable range.
    #[error("numerical range error: {0}")]
    NumericalRange(String),

    #[error("token {token} out of range for vocabulary of size {vocab}")]
    TokenOutOfRange { token: u32, vocab: usize },

    #[error("sentence has no parse: {0}")]
    NoParse(String),

    #[error("degenerate representation: {0}")]
    Degenerate(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("non-finite value in forward pass: {0}")]
    NonFinite(String),

    #[error("training diverged at {stage}: validation {current:.3} bits exceeds 10x initial {initial:.3} bits")]
    TrainingDiverged {
        stage: String,
        initial: f64,
        current: f64,
    },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
