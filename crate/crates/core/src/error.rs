use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("density cannot be normalized: {0}")]
    NotNormalizable(String),

    #[error("density `{name}` integrates to {integral} (tolerance {tolerance})")]
    Normalization {
        name: String,
        integral: f64,
        tolerance: f64,
    },

    #[error("quadrature did not reach tolerance: best estimate {estimate}, error {error_estimate}")]
    Convergence { estimate: f64, error_estimate: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("method `{0}` is already registered")]
    DuplicateMethod(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
