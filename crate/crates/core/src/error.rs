use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unreadable shard `{shard}`: {source}")]
    Shard {
        shard: String,
        #[source]
        source: io::Error,
    },

    #[error("i/o error on `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("invalid vocabulary: {0}")]
    Vocab(String),

    #[error("empty corpus: nothing to train on")]
    EmptyCorpus,

    #[error("targets not in the domain vocabulary: {}", .0.join(", "))]
    UnknownTargets(Vec<String>),

    #[error("token sequence starts a word with continuation token at position {0}")]
    DanglingContinuation(usize),

    #[error("cannot distill `{0}`: its base tokenization contains [UNK]")]
    Undistillable(String),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("missing scan hits for tokens: {}", .0.join(", "))]
    MissingHits(Vec<String>),

    #[error("malformed matrix file: {0}")]
    MatrixFormat(String),

    #[error("malformed context vector file: {0}")]
    ContextFormat(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown curriculum phase version `{0}`")]
    UnknownPhase(String),

    #[error("step {step} outside schedule of {total} steps")]
    StepOutOfRange { step: u64, total: u64 },

    #[error("example has no selected positions")]
    NoSelectedPositions,

    #[error("predictor assigned zero probability to label {token} at position {position}")]
    ZeroProbability { position: usize, token: u32 },

    #[error("zero vector at index {0}")]
    ZeroVector(usize),

    #[error("embedding provider failed: {0}")]
    Provider(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
