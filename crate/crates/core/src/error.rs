use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown payment code {0:?}")]
    UnknownPaymentCode(String),

    #[error("empty observation window")]
    EmptyWindow,

    #[error("empty catalog")]
    EmptyCatalog,

    #[error("duplicate feature name {0:?}")]
    DuplicateFeature(String),

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{what} did not converge after {iterations} iterations (last step {last_step:.3e}, gradient norm {gradient_norm:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        last_step: f64,
        gradient_norm: f64,
    },

    #[error("schema error in {file} at row {row}: {message}")]
    Schema {
        file: String,
        row: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of a numerical procedure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}
