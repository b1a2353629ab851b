use thiserror::Error;

/// Errors raised by the geometry, channel, optimizer and clustering layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate geometry: user co-located with AP")]
    DegenerateGeometry,

    #[error("zero-length orientation vector")]
    ZeroOrientation,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("user count must be at least 1")]
    NoUsers,

    #[error("infeasible: user unreachable")]
    Infeasible,

    #[error("clustering failed: {0}")]
    Clustering(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
