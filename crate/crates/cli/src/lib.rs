//! Library side of the `sigbench` command-line tool.
//!
//! The binary is a thin argument parser over [`commands`]; everything the
//! subcommands do lives here so integration tests can drive the same code
//! paths directly. [`config`] describes a scoring pipeline, [`pipeline`]
//! executes it over prepared signatures, and [`synth`] generates seeded
//! synthetic datasets in the canonical file formats.

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod synth;

use std::path::{Path, PathBuf};

/// Tool-level error. Validation problems (bad config, malformed input,
/// unresolved ids) exit with code 2; filesystem problems with code 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] sigbench::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for scripting: 0 success, 2 validation, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Core(_) | Error::Invalid(_) => 2,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::io(path, source))
}

/// Writes a file, creating missing parent directories first.
pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::io(parent, source))?;
        }
    }
    std::fs::write(path, text).map_err(|source| Error::io(path, source))
}
