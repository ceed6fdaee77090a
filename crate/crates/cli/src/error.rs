use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] peanut_core::Error),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn io_at(path: &Path, e: io::Error) -> Self {
        CliError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    }

    /// Prefixes format errors with the offending file.
    pub fn context(self, path: &Path) -> Self {
        match self {
            CliError::Format(msg) => CliError::Format(format!("{}: {msg}", path.display())),
            other => other,
        }
    }

    /// 2 when a run finished without converging, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NotConverged(_) => 2,
            _ => 1,
        }
    }
}
