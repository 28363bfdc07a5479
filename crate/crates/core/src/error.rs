use thiserror::Error;

/// Errors raised by the link model, the optimizers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid OFDM configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("path delay of {delay} samples exceeds the cyclic prefix length {cp_len}")]
    DelayExceedsCp { delay: usize, cp_len: usize },

    #[error("invalid channel scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid SIC order: {0}")]
    InvalidSicOrder(String),

    #[error("invalid subcarrier assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid optimizer options: {0}")]
    InvalidOptions(String),

    #[error("minimum-rate constraints are infeasible (best achievable min slack {slack:.6} bit/s/Hz)")]
    Infeasible { slack: f64 },

    #[error("grid search too large: {0}")]
    GridTooLarge(String),

    #[error("invalid scenario config field `{field}`: {reason}")]
    ConfigField { field: String, reason: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
