use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: file contains no records")]
    EmptyFile { path: PathBuf },

    #[error("zero vector for word {word:?}")]
    ZeroVector { word: String },

    #[error("concept {name:?}: word list is empty")]
    EmptyConcept { name: String },

    #[error(
        "concept {name:?}: wildcard entry {entry:?} at line {line}; rerun with --expand-wildcards \
         to expand trailing '*' against the embedding vocabulary"
    )]
    Wildcard {
        name: String,
        entry: String,
        line: usize,
    },

    #[error(
        "concept {name:?} too small after vocabulary resolution: {found} of {listed} words in \
         {embedding:?}, need at least {min}"
    )]
    ConceptTooSmall {
        name: String,
        embedding: String,
        found: usize,
        listed: usize,
        min: usize,
    },

    #[error("vocabulary too small: {message}")]
    VocabularyTooSmall { message: String },

    #[error("word {word:?} is not in embedding {embedding:?}")]
    OutOfVocabulary { word: String, embedding: String },

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate}): loss is {loss}")]
    NonFiniteLoss {
        epoch: usize,
        learning_rate: f64,
        loss: f64,
    },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all paired differences are zero")]
    AllZeroDifferences,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid manifest: {0}")]
    Manifest(String),
}

impl Error {
    /// Errors caused by bad user input (files, manifests, lists) rather than
    /// a failure during computation.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::EmptyFile { .. }
            | Error::EmptyConcept { .. }
            | Error::Wildcard { .. }
            | Error::ConceptTooSmall { .. }
            | Error::VocabularyTooSmall { .. }
            | Error::InvalidInput(_)
            | Error::Manifest(_)
            | Error::ZeroVector { .. } => true,
            Error::Iteration { source, .. } => source.is_input_error(),
            Error::OutOfVocabulary { .. }
            | Error::NonFiniteLoss { .. }
            | Error::AllZeroDifferences => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
