use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("{path}: duplicate id {id} at line {line}")]
    DuplicateId { path: PathBuf, line: usize, id: String },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: truncated file")]
    Truncated { path: PathBuf },
    #[error("{path}: bad magic, expected {expected}")]
    BadMagic { path: PathBuf, expected: &'static str },
    #[error("config: {0}")]
    Config(String),
    #[error("config references missing path {0}")]
    MissingPath(PathBuf),
    #[error("config: unknown stage kind {kind:?} in stage {stage:?}")]
    UnknownStage { stage: String, kind: String },
    #[error("config: dependency cycle through stages {0:?}")]
    Cycle(Vec<String>),
    #[error("{what} was produced under config {found}, expected {expected}")]
    HashMismatch { what: String, expected: String, found: String },
    #[error("stage {stage} failed: {source}")]
    Stage { stage: String, source: Box<Error> },
    #[error("embeddings missing; wrote embedding request {request}")]
    EmbeddingsRequired { request: PathBuf },
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] curate_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// Process exit code: 2 config, 3 data, 4 stage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::MissingPath(_) | Error::UnknownStage { .. } | Error::Cycle(_) => 2,
            Error::Stage { .. } | Error::EmbeddingsRequired { .. } => 4,
            _ => 3,
        }
    }
}
