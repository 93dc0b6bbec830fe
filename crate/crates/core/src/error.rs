use thiserror::Error;

/// Errors raised by the simulator and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to load image: {0}")]
    Load(String),

    #[error("integration blew up at node ({x}, {y}) on iteration {iteration}")]
    BlowUp { x: usize, y: usize, iteration: u64 },

    #[error("mapping with k = {k} is too large for an exhaustive drive (k <= {max}); use a sampled drive instead")]
    MappingTooLarge { k: usize, max: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
