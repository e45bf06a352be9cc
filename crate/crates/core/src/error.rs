use std::path::PathBuf;

/// Errors produced by every fallible operation in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An index or region falls outside an allowed interval.
    #[error("range error: {0}")]
    Range(String),

    /// Array, image or tensor shapes do not agree.
    #[error("size error: {0}")]
    Size(String),

    /// Input has zero spread after min subtraction and cannot be normalized.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A value violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A requested published kernel or model does not exist.
    #[error("not found: {0}")]
    NotFound(String),

    /// Operation not allowed in the current state (e.g. uninitialized batch-norm).
    #[error("state error: {0}")]
    State(String),

    /// Inconsistent training or distillation configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed model container, latent container or image file.
    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Parse failures for the binary formats (EMLC, EMNN, PGM).
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("unsupported version {found} (supported: {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },

    #[error("truncated input: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },

    #[error("inconsistent contents: {0}")]
    Inconsistent(String),

    #[error("malformed header: {0}")]
    Header(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
