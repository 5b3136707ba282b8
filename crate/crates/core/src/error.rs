use thiserror::Error;

/// Errors raised by the simulator and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("domain mismatch between fields")]
    DomainMismatch,

    #[error("grid resolution {resolution} too small for {modes} modes (need at least {required})")]
    Resolution {
        resolution: usize,
        modes: usize,
        required: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("sampling mismatch: {0}")]
    Sampling(String),

    #[error("not enough samples: have {have}, need {need}")]
    TooFewSamples { have: usize, need: usize },

    #[error("route disagreement: {0}")]
    RouteDisagreement(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
