//! Error type shared by the library.
//!
//! Errors are split into two broad families so callers (notably the CLI)
//! can map them to distinct exit codes: validation problems caused by bad
//! input (`InvalidArgument`, `Config`, `Parse`) and runtime failures that
//! occur after inputs were accepted (`NonFinite`, `Diverged`, `Io`).

use std::path::PathBuf;

/// Unified error type for dataset handling, training and file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A function argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numeric quantity became NaN or infinite.
    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    /// Training failed to make progress or blew up.
    #[error("training diverged at epoch {epoch}: {context}")]
    Diverged { epoch: usize, context: String },

    /// Underlying I/O failure, annotated with the path involved. The
    /// source is chained, not inlined, so error-chain printers do not
    /// repeat it.
    #[error("io error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file had valid I/O but malformed contents.
    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

impl Error {
    /// Convenience constructor for [`Error::Io`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Convenience constructor for [`Error::Parse`].
    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// True when the error stems from user-provided input rather than a
    /// runtime failure. CLI maps these to exit code 1, the rest to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_) | Error::Config(_) | Error::Parse { .. }
        )
    }
}

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
