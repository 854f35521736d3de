use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing slice index {index}")]
    MissingSlice { index: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("truncated file {path}: expected {expected} bytes, found {found}")]
    TruncatedFile {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("fixed-point iteration did not converge (best residual {residual} px)")]
    NotConverged { residual: f64 },

    #[error("image has zero variance; normalized cross-correlation is undefined")]
    FlatImage,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("evaluation mask is empty")]
    EmptyMask,

    #[error("slice sets differ: record has {record:?}, result has {result:?}")]
    SliceSetMismatch {
        record: Vec<usize>,
        result: Vec<usize>,
    },

    #[error("coordinate convention mismatch: {0}")]
    ConventionMismatch(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("slice {z}: {source}")]
    AtSlice {
        z: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("image codec error on {path}: {source}")]
    Codec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

impl Error {
    pub fn at_slice(self, z: usize) -> Self {
        Error::AtSlice {
            z,
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(expected: impl std::fmt::Debug, found: impl std::fmt::Debug) -> Self {
        Error::DimensionMismatch {
            expected: format!("{expected:?}"),
            found: format!("{found:?}"),
        }
    }

    /// Innermost error, with slice and stage context peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSlice { source, .. } | Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 2 configuration, 3 data, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) | Error::InvalidSpec(_) => 2,
            Error::NotConverged { .. } | Error::FlatImage | Error::NonFinite(_) => 4,
            _ => 3,
        }
    }
}
