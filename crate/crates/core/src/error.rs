use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("sample budget {requested} exceeds cloud size {available}")]
    BudgetExceeds { requested: usize, available: usize },

    #[error("correspondence target is empty")]
    EmptyTarget,

    #[error("mode count {k} exceeds bound {bound}")]
    InvalidK { k: usize, bound: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("label {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },

    #[error("head cannot shrink from {current} to {requested} classes")]
    ShrinkNotAllowed { current: usize, requested: usize },

    #[error("no classes to schedule")]
    EmptyClasses,

    #[error("class `{0}` appears in more than one session")]
    DisjointnessViolated(String),

    #[error("label `{0}` is not among the seen classes")]
    UnseenLabel(String),

    #[error("evaluation set is empty")]
    EmptySet,

    #[error("bad synthetic spec: {0}")]
    BadSpec(String),

    #[error("requested {requested} classes, only {available} families exist")]
    TooManyClasses { requested: usize, available: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("file truncated: {0}")]
    Truncated(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
