use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{column}` contains a non-finite value")]
    NonFinite { column: String },

    #[error("column `{0}` not found")]
    UnknownColumn(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("histogram has zero total mass")]
    ZeroMass,

    #[error("child masses ({children}) exceed parent mass ({parent})")]
    MassExceedsParent { parent: f64, children: f64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("tiny instance exceeds caps (n = {n}, m = {m}; limit is 8 each, binary tests only)")]
    CapExceeded { n: usize, m: usize },

    #[error("unknown algorithm tag `{0}`")]
    UnknownTag(String),

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
