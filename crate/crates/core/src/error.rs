use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate passage id `{id}`")]
    DuplicateId { line: usize, id: String },

    #[error("vocabulary empty after pruning")]
    EmptyVocabulary,

    #[error("no co-occurrence evidence: no passage has at least two in-vocabulary tokens")]
    NoCooccurrenceEvidence,

    #[error("need {needed} anchor candidates but only {available} qualify (short by {})", needed - available)]
    InsufficientCandidates { needed: usize, available: usize },

    #[error("need {needed} eligible passages for tandem anchors but only {available} qualify")]
    InsufficientPassages { needed: usize, available: usize },

    #[error("anchor {anchor} is an all-zero vector")]
    ZeroAnchor { anchor: usize },

    #[error("non-finite value while processing {context}")]
    NonFinite { context: String },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("ground truth is empty")]
    EmptyGroundTruth,

    #[error("{unresolved} of {total} references could not be resolved against the corpus (likely an id-scheme mismatch)")]
    TooManyUnresolved { unresolved: usize, total: usize },

    #[error("curve never reaches {target} true positives (max achievable {max_tp})")]
    TargetUnreachable { target: usize, max_tp: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
