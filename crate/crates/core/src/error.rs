use thiserror::Error;

pub type Result<T> = std::result::Result<T, SpfError>;

#[derive(Debug, Error)]
pub enum SpfError {
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("parse error at data row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error ({reason}); offending segments: {}", .segment_ids.join(", "))]
    Validation {
        reason: String,
        segment_ids: Vec<String>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("model specification error: {0}")]
    Spec(String),

    #[error("computation error: {0}")]
    Computation(String),

    #[error("optimization failed after {iterations} iterations: {message}")]
    Optimization { message: String, iterations: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SpfError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        SpfError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 1 for bad input or configuration, 2 for failures
    /// during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            SpfError::Domain(_)
            | SpfError::Computation(_)
            | SpfError::Optimization { .. } => 2,
            _ => 1,
        }
    }
}
