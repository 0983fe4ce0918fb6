use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("budget of {budget} tokens cannot hold {required} required tokens")]
    BudgetTooSmall { budget: usize, required: usize },
    #[error("split ratio {0} must lie strictly between 0 and 1")]
    InvalidSplit(f64),
    #[error("invalid trigger set: {0}")]
    InvalidTriggerSet(String),
    #[error("no maskable span: {0}")]
    NoMaskableSpan(&'static str),
    #[error("training target is empty")]
    EmptyTarget,
    #[error("language must not be empty")]
    EmptyLanguage,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("model has an empty vocabulary")]
    EmptyVocabulary,
    #[error("unknown sample {0:?}")]
    UnknownSample(String),
    #[error("invalid decode parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("bad magic header, expected NGRM1")]
    BadMagic,
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("malformed event: {0}")]
    Malformed(String),
    #[error("event log is full ({0} events)")]
    StorageFull(usize),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("corpus too small: language {language} yielded {found} of {wanted} samples")]
    CorpusTooSmall {
        language: String,
        found: usize,
        wanted: usize,
    },
    #[error("empty reference")]
    EmptyReference,
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
