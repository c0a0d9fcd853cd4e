use std::path::PathBuf;

use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("utterance {utterance}: {reason}")]
    InvalidUtterance { utterance: String, reason: String },

    #[error("manifest {path}: {reason}")]
    InvalidManifest { path: PathBuf, reason: String },

    #[error("lexicon entry for {word:?}: unknown phoneme symbol {symbol:?}")]
    UnknownPhoneme { word: String, symbol: String },

    #[error("lexicon {path}: {reason}")]
    InvalidLexicon { path: PathBuf, reason: String },

    #[error("frame image {path}: {reason}")]
    BadFrameImage { path: PathBuf, reason: String },

    #[error("invalid ROI input: {0}")]
    BadRoi(String),

    #[error("invalid synthetic corpus spec: {0}")]
    BadSyntheticSpec(String),

    #[error("feature extraction: {0}")]
    Feature(String),

    #[error("classifier: {0}")]
    Classifier(String),

    #[error("vocabulary construction: {0}")]
    Vocabulary(String),

    #[error("hmm: {0}")]
    Hmm(String),

    #[error("evaluation: {0}")]
    Eval(String),

    #[error("pipeline: {0}")]
    Pipeline(String),

    #[error("cache file {path}: {reason}")]
    BadCache { path: PathBuf, reason: String },

    #[error("model file {path}: {reason}")]
    BadModel { path: PathBuf, reason: String },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
