use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("i/o error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: u64, reason: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("truncated input: expected {expected} records, read {found}")]
    Truncation { expected: u64, found: u64 },
    #[error("non-finite value in record {index}")]
    NonFinite { index: u64 },
    #[error("unknown subject `{0}`")]
    UnknownSubject(String),
    #[error("join error: {0}")]
    Join(String),
    #[error("insufficient look-alike candidates for `{subject}`: need {needed}, have {available}")]
    InsufficientCandidates {
        subject: String,
        needed: usize,
        available: usize,
    },
    #[error("empty training set: {0}")]
    EmptyTrainingSet(String),
    #[error("degenerate sampling pool: {0}")]
    DegeneratePool(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training diverged at epoch {epoch}, step {step}: loss is not finite")]
    Divergence { epoch: usize, step: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("zero vector has no cosine similarity")]
    ZeroVector,
    #[error("empty input")]
    EmptyInput,
    #[error("incompatible accumulators: {0}")]
    IncompatibleAccumulators(String),
    #[error("no identical-twin non-mated pairs were scored")]
    NoTwinPairs,
    #[error("score class `{0}` is empty")]
    EmptyClass(&'static str),
    #[error("FMR target {target} unreachable with {impostors} impostor scores (floor {floor})")]
    UnreachableFmr { target: f64, impostors: usize, floor: f64 },
    #[error("too few samples: need at least {needed}, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
