use std::path::PathBuf;

use thiserror::Error;

/// Failure surface of the dataset pipeline. Variants map onto the CLI's
/// exit codes: `Io` is a usage-level problem (1), `Malformed`/`Answer`/
/// `Verify` are input failures (2), `Transport`/`Checkpoint` are pipeline
/// failures (3).
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Malformed {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("cannot retrieve final answer: {0}")]
    Answer(String),
    #[error("verification failed for id {id}: {detail}")]
    Verify { id: u64, detail: String },
    #[error("{0}")]
    InsufficientExamples(String),
    #[error("completion request failed: {0}")]
    Transport(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("{0}")]
    Invalid(String),
}

impl PipelineError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn malformed(path: impl Into<PathBuf>, line: usize, detail: impl Into<String>) -> Self {
        PipelineError::Malformed {
            path: path.into(),
            line,
            detail: detail.into(),
        }
    }
}
