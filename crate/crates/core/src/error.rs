use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("runtime integrity fault: {0}")]
    Integrity(String),

    #[error("forward cache does not belong to this network")]
    CacheMismatch,

    #[error("conversion refused: {0}")]
    Conversion(String),

    #[error("training diverged at iteration {iteration}: {reason}")]
    Divergence { iteration: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("checksum mismatch in {0}")]
    Checksum(String),

    #[error("unsupported schema version {found} (supported major {supported})")]
    UnsupportedVersion { found: String, supported: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
