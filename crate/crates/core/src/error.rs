use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("training data contains only one label")]
    SingleLabel,
    #[error("training data is empty")]
    EmptyTrainingSet,
    #[error("non-finite loss in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("expected vector of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in input {0}")]
    NonFinite(String),
    #[error("no embedding for sample {0}")]
    MissingEmbedding(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("every candidate vector has zero norm")]
    AllZeroNorm,
    #[error("score table is empty")]
    EmptyScores,
    #[error("retention fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("token budget must be positive")]
    NonPositiveBudget,
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("retained id {0} not present in corpus")]
    MissingDocument(String),
    #[error("replay rate {0} outside [0, 1)")]
    InvalidReplayRate(f64),
    #[error("replay needs {needed} raw documents, only {available} available")]
    InsufficientReplay { needed: usize, available: usize },
    #[error("no benchmark text is long enough to yield a {0}-gram")]
    EmptyIndex(usize),
    #[error("n-gram index normalization tag {found} does not match {expected}")]
    NormalizationMismatch { expected: String, found: String },
    #[error("metric table is not rectangular: {0}")]
    NotRectangular(String),
    #[error("no surviving positive samples")]
    NoPositives,
    #[error("id {0} appears with both labels")]
    LabelConflict(String),
}
