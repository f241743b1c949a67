use thiserror::Error;

/// Errors raised anywhere in the simulation and analysis chain.
#[derive(Debug, Error)]
pub enum QtdiError {
    /// More particles than hard-core/fermionic sites can hold.
    #[error("capacity exceeded: {particles} particles on {sites} sites (at most one per site)")]
    Capacity { sites: usize, particles: usize },

    #[error("index out of range: {what} = {index}, valid range is 0..{len}")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    /// Objects built over different bases or with mismatched dimensions.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A numerical precondition (Hermiticity, normalization, positivity) failed.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("momentum grid error: {0}")]
    Grid(String),

    /// Not enough independent phases to determine offset, amplitude and phase.
    #[error("identifiability error: {0}")]
    Identifiability(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl QtdiError {
    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            QtdiError::Capacity { .. } => "capacity",
            QtdiError::Index { .. } => "index",
            QtdiError::Configuration(_) => "configuration",
            QtdiError::Numeric(_) => "numeric",
            QtdiError::Grid(_) => "grid",
            QtdiError::Identifiability(_) => "identifiability",
            QtdiError::Parse(_) => "parse",
            QtdiError::Io(_) => "io",
            QtdiError::Csv(_) => "csv",
            QtdiError::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, QtdiError>;
