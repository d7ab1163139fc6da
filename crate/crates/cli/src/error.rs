//! Error type shared by the pipeline stages, with the process exit code
//! contract: 0 success, 2 usage, 3 validation, 4 I/O.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("missing file {path}")]
    MissingFile { path: PathBuf },

    #[error("{0}")]
    Validation(String),

    #[error("study {study_id}: {message}")]
    Study { study_id: String, message: String },

    #[error("{path}:{row}: {message}")]
    AnnotationRow {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("unknown record key {key}")]
    UnknownRecord { key: String },
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } | CliError::MissingFile { .. } => EXIT_IO,
            CliError::Validation(_)
            | CliError::Study { .. }
            | CliError::AnnotationRow { .. }
            | CliError::UnknownRecord { .. } => EXIT_VALIDATION,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Read a file with the missing-file case reported distinctly.
pub fn read_to_string(path: &std::path::Path) -> Result<String> {
    if !path.exists() {
        return Err(CliError::MissingFile {
            path: path.to_path_buf(),
        });
    }
    std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn read_bytes(path: &std::path::Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(CliError::MissingFile {
            path: path.to_path_buf(),
        });
    }
    std::fs::read(path).map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::io(parent.display().to_string(), e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path.display().to_string(), e))
}
