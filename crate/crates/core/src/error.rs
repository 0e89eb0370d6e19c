use std::path::PathBuf;

use thiserror::Error;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("unsupported format version {found} in {path} (expected {expected})")]
    VersionMismatch {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("truncated file {path}: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("corrupt manifest {path}: {detail}")]
    CorruptManifest { path: PathBuf, detail: String },

    #[error("non-finite sample in trial {trial} of {path}")]
    NanPayload { path: PathBuf, trial: String },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("malformed file {path}: {detail}")]
    Format { path: PathBuf, detail: String },

    #[error("I/O error on {path}: {err}")]
    Io { path: PathBuf, err: std::io::Error },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io { path: path.into(), err }
    }

    /// Numeric failures (divergence, NaN) as opposed to bad input data or usage.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::Diverged { .. })
    }

    /// Problems with files or their contents.
    pub fn is_data(&self) -> bool {
        matches!(
            self,
            Error::VersionMismatch { .. }
                | Error::Truncated { .. }
                | Error::CorruptManifest { .. }
                | Error::NanPayload { .. }
                | Error::InvalidData(_)
                | Error::Format { .. }
                | Error::Io { .. }
        )
    }
}
