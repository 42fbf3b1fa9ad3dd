use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid PGD: {0}")]
    InvalidPgd(String),

    #[error("identity component {component:?} has {size} entities, above the cap of {cap}")]
    ComponentTooLarge {
        component: Vec<String>,
        size: usize,
        cap: usize,
    },

    #[error("identity component {component:?} has no configuration with non-zero weight")]
    DegenerateComponent { component: Vec<String> },

    #[error("enumeration would visit {required} worlds, above the cap of {cap}")]
    EnumerationCap { required: u128, cap: u128 },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("query needs a path of length {needed} but the index holds paths up to {max}")]
    PathTooLong { needed: usize, max: usize },

    #[error("threshold {alpha} is below the index build threshold {beta}")]
    BelowBuildThreshold { alpha: f64, beta: f64 },

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("incompatible artifact: {0}")]
    Incompatible(String),

    #[error("corrupt artifact {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable identifier of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidPgd(_) => "invalid-pgd",
            Error::ComponentTooLarge { .. } => "component-too-large",
            Error::DegenerateComponent { .. } => "degenerate-component",
            Error::EnumerationCap { .. } => "enumeration-cap",
            Error::InvalidQuery(_) => "invalid-query",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::PathTooLong { .. } => "path-too-long",
            Error::BelowBuildThreshold { .. } => "below-build-threshold",
            Error::UnknownEntity(_) => "unknown-entity",
            Error::Incompatible(_) => "incompatible",
            Error::Corrupt { .. } => "corrupt",
            Error::MissingFile(_) => "missing-file",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Corrupt {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
