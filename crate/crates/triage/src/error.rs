use thiserror::Error;

#[derive(Debug, Error)]
pub enum TriageError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("labeler `{labeler}` already labeled item `{item}`")]
    DuplicateLabel { item: String, labeler: String },
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("labelers did not label the same items")]
    ItemSetMismatch,
    #[error("{0} item(s) have no final verdict")]
    UnresolvedItems(usize),
    #[error("item `{0}` is not in disagreement")]
    NotInDisagreement(String),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("journal {path}:{line}: {source}")]
    Journal {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Pipeline(#[from] latent_sv::Error),
}

impl TriageError {
    /// Stable code used in HTTP error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            TriageError::EmptyInput(_) => "EmptyInput",
            TriageError::DuplicateLabel { .. } => "DuplicateLabel",
            TriageError::UnknownItem(_) => "UnknownItem",
            TriageError::ItemSetMismatch => "ItemSetMismatch",
            TriageError::UnresolvedItems(_) => "UnresolvedItems",
            TriageError::NotInDisagreement(_) => "NotInDisagreement",
            TriageError::InvalidLabel(_) => "InvalidLabel",
            TriageError::Journal { .. } => "JournalCorrupt",
            TriageError::Io(_) | TriageError::Json(_) | TriageError::Pipeline(_) => "Internal",
        }
    }
}

pub type Result<T, E = TriageError> = std::result::Result<T, E>;
