use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by the stage that raises them so that callers (and
/// the CLI) can map them onto a stable error taxonomy.
#[derive(Debug, Error)]
pub enum Error {
    // dataset / core types
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("stratification impossible: class `{class}` has {count} samples, need at least {needed}")]
    Stratification {
        class: String,
        count: usize,
        needed: usize,
    },
    #[error("empty data: {0}")]
    EmptyData(String),
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("invalid label `{0}` (expected circular, elongated or other)")]
    InvalidLabel(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    // imaging / features
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("degenerate shape: slot `{slot}` is undefined ({reason})")]
    DegenerateShape { slot: &'static str, reason: String },
    #[error("insufficient texture for GLCM config {config}: {pairs} valid pixel pairs")]
    InsufficientTexture { config: String, pairs: usize },
    #[error("non-finite feature value in slot `{0}`")]
    NonFinite(String),
    #[error("feature extraction failed for `{id}`: {source}")]
    Extraction {
        id: String,
        #[source]
        source: Box<Error>,
    },

    // schema
    #[error("schema mismatch: expected {expected}, found {found}")]
    Schema { expected: String, found: String },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    // learners
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("training diverged at round {round}: loss = {loss}")]
    Divergence { round: usize, loss: f64 },
    #[error("{learner} requires standardized inputs (column {column}: mean {mean:.3}, std {std:.3}); set allow_unstandardized to override")]
    Unstandardized {
        learner: &'static str,
        column: usize,
        mean: f64,
        std: f64,
    },
    #[error("ensemble member {index} failed: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    // importance
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("feature selection left member {member} with no features")]
    EmptySelection { member: usize },

    // persistence / io
    #[error("unsupported model format version {found} (this build reads {supported})")]
    FormatVersion { found: u32, supported: u32 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn member(index: usize, source: Error) -> Self {
        Error::Member {
            index,
            source: Box::new(source),
        }
    }
}
