use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: line {line} is not valid UTF-8", path.display())]
    InvalidUtf8 { path: PathBuf, line: usize },

    #[error("{}: lexicon contains no lemmas", path.display())]
    EmptyLexicon { path: PathBuf },

    #[error("gold table row {row}: {reason}")]
    MalformedGold { row: usize, reason: String },

    #[error("prediction row {row}: {reason}")]
    MalformedPrediction { row: usize, reason: String },

    #[error("lemma of length zero")]
    EmptyLemma,

    #[error("corpus has {0} token(s); at least 2 are required")]
    CorpusTooShort(usize),

    #[error("unknown slot {0}")]
    UnknownSlot(String),

    #[error("gold table is empty")]
    EmptyGold,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid synthetic language request: {0}")]
    Synthetic(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
