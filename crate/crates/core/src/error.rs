use std::path::PathBuf;

/// Errors produced by learners, data loaders and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("target is not one-hot: {0}")]
    NotOneHot(String),

    #[error("non-finite parameter after step {step}")]
    Divergence { step: u64 },

    #[error("IDX parse error at byte offset {offset}: {kind}")]
    Parse { offset: usize, kind: ParseErrorKind },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// What went wrong while decoding an IDX stream.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("stream truncated: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("unsupported image size {rows}x{cols}, expected 28x28")]
    BadDimensions { rows: u32, cols: u32 },
    #[error("label {label} outside 0..=9")]
    LabelOutOfRange { label: u8 },
    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(offset: usize, kind: ParseErrorKind) -> Self {
        Error::Parse { offset, kind }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
