use std::path::PathBuf;

use thiserror::Error;

use crate::tensor::Shape5;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch on axis {axis}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        axis: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{op}: invalid geometry: {detail}")]
    Geometry { op: &'static str, detail: String },

    #[error("invalid shape {0:?}: every axis must be >= 1 and the element count addressable")]
    InvalidShape([usize; 5]),

    #[error("data length {got} does not match shape {shape} ({expected} elements)")]
    DataLength {
        shape: Shape5,
        expected: usize,
        got: usize,
    },

    #[error("batch_norm: train mode needs more than one element per channel, got {0}")]
    DegenerateBatch(usize),

    #[error("backward root must be a scalar, got shape {0}")]
    NonScalarRoot(Shape5),

    #[error("backward root does not depend on any tensor that requires grad")]
    NoGradPath,

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("discriminator needs at least two frames, got {0}")]
    NeedsTwoFrames(usize),

    #[error("duplicate parameter name {0:?}")]
    DuplicateParam(String),

    #[error("missing array {0:?}")]
    MissingArray(String),

    #[error("{0}")]
    Contract(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("truncated input while reading {0}")]
    Truncated(&'static str),

    #[error("malformed file: {0}")]
    Malformed(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn geometry(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Geometry {
            op,
            detail: detail.into(),
        }
    }
}
