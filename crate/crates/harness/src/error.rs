use credal_core::CredalError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CredalError),

    /// A numerical failure inside one replication, with the coordinates
    /// needed to re-run exactly that replication.
    #[error("{experiment} (config {config_hash}, replication {index}): {source}")]
    Replication {
        experiment: String,
        config_hash: String,
        index: u64,
        #[source]
        source: CredalError,
    },

    #[error("rows mix experiments {0} and {1}")]
    MixedExperiments(String, String),

    #[error("no rows to summarize")]
    EmptyRows,

    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
