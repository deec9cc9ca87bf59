use thiserror::Error;

/// Errors surfaced by the learning engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("ingestion error at row {row}, column {column}: {message}")]
    Ingestion {
        /// 1-based data row (0 = header / whole file).
        row: usize,
        column: String,
        message: String,
    },

    #[error(
        "estimated peak memory {estimated_bytes} bytes exceeds budget {budget_bytes} bytes; \
         refusing to run"
    )]
    MemoryBudget {
        estimated_bytes: u64,
        budget_bytes: u64,
    },

    #[error("variable count {p} exceeds the configured cap {cap}")]
    VariableCap { p: usize, cap: usize },

    #[error("internal state error: {0}")]
    InternalState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
