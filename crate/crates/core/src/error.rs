use std::path::PathBuf;

use crate::corpus::Rating;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },

    #[error("unknown genre `{0}`")]
    UnknownGenre(String),

    #[error("unknown rating `{0}`")]
    UnknownRating(String),

    #[error("unknown emotion category `{0}`")]
    UnknownCategory(String),

    #[error("record `{0}`: script has no tokens")]
    EmptyScript(String),

    #[error("no records")]
    NoRecords,

    #[error("class {rating} has {count} member(s); at least 3 are needed to populate every split")]
    SmallClass { rating: Rating, count: usize },

    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint does not match pipeline: {0}")]
    ConfigMismatch(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("checkpoint is corrupted: {0}")]
    Corrupted(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
