use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the mining and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("not a git repository: {}", .0.display())]
    NotARepository(PathBuf),
    #[error("repository is corrupt: {0}")]
    RepositoryCorrupt(String),
    #[error("unknown commit `{0}`")]
    UnknownCommit(String),
    #[error("line {line_no} out of range for `{path}` at {commit} ({len} lines)")]
    LineOutOfRange {
        commit: String,
        path: String,
        line_no: usize,
        len: usize,
    },
    #[error("path `{path}` missing at commit {commit}")]
    PathMissingAtCommit { commit: String, path: String },
    #[error("{from} is not an ancestor of {to}")]
    NotAncestor { from: String, to: String },
    #[error("trace from {origin} exceeded {limit} hops")]
    HopLimitExceeded { origin: String, limit: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("no trace recorded for origin `{0}`")]
    MissingTrace(String),
    #[error("classifier has not been trained")]
    UntrainedClassifier,
    #[error("no score for `{0}` in the external score file")]
    MissingScore(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vectors from different vocabularies: `{expected}` vs `{got}`")]
    VocabularyMismatch { expected: String, got: String },
    #[error("training class `{0}` is empty")]
    EmptyClass(&'static str),
    #[error("training set contains a single class")]
    SingleClassTrainingSet,
    #[error("need at least {min} samples to split, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("latent candidate refers to unknown origin `{0}`")]
    OriginNotFound(String),
    #[error("{0} candidates are still unclassified")]
    UnclassifiedPresent(usize),
    #[error("prediction and label ids do not align: {0}")]
    IdMismatch(String),
    #[error("function `{0}` has no line scores")]
    MissingLineScores(String),
    #[error("scored functions contain no vulnerable lines")]
    NoVulnerableLines,
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("output directory {} is not empty", .0.display())]
    DirectoryNotEmpty(PathBuf),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{}:{line}: {source}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Git(#[from] git2::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Bad input or configuration, as opposed to a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotARepository(_)
                | Error::UnknownCommit(_)
                | Error::EmptyInput(_)
                | Error::DirectoryNotEmpty(_)
                | Error::InvalidSpec(_)
                | Error::InvalidConfig(_)
                | Error::Parse { .. }
                | Error::TooFewSamples { .. }
                | Error::IdMismatch(_)
                | Error::OriginNotFound(_)
        )
    }
}
