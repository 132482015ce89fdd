use thiserror::Error;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("power level index {index} out of range (levels = {levels})")]
    ActionOutOfRange { index: usize, levels: usize },

    #[error("episode is terminal; reset the environment before stepping")]
    EpisodeTerminal,

    #[error("environment must be reset before stepping")]
    NotReset,

    #[error("network shape mismatch between parameter vectors")]
    SpecMismatch,

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
