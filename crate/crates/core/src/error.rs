use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("directory {0} does not exist or is not a directory")]
    MissingDirectory(PathBuf),

    #[error("directory {0} contains no files")]
    EmptyDirectory(PathBuf),

    #[error("requested vocabulary of {requested} keywords but the corpus only has {available} distinct keywords")]
    VocabularyTooLarge { requested: usize, available: usize },

    #[error("arity d = {d} exceeds vocabulary size v = {v}")]
    ArityExceedsVocabulary { v: usize, d: usize },

    #[error("arity d = {0} is outside the supported range 1..=3 (enable large-arity override to allow it)")]
    UnsupportedArity(usize),

    #[error("integer overflow computing {0}")]
    Overflow(String),

    #[error("malformed conjunction: {0}")]
    MalformedConjunction(String),

    #[error("rank {rank} out of range for a set of {m} conjunctions")]
    RankOutOfRange { rank: u64, m: u64 },

    #[error("malformed trapdoor token: {0}")]
    MalformedTrapdoor(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("only {eligible} eligible observations available but {requested} known queries were requested")]
    NotEnoughKnownQueries { requested: usize, eligible: usize },

    #[error("memory budget of {budget} bytes is below the minimum feasible {minimum} bytes")]
    BudgetTooSmall { budget: u64, minimum: u64 },

    #[error("{what} needs {required} bytes, exceeding the budget of {budget} bytes (see `estimate` for planning)")]
    BudgetExceeded {
        what: String,
        required: u64,
        budget: u64,
    },

    #[error("duplicate known query: {0}")]
    DuplicateKnownQuery(String),

    #[error("known query refers to {0} unknown to the attack input")]
    UnknownKnownQuery(String),

    #[error("the attack needs at least one known query")]
    NoKnownQueries,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no unknown queries left to score")]
    NoUnknownQueries,

    #[error("extrapolation: {0}")]
    Extrapolation(String),

    #[error("malformed input {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("results already exist at {0}; pass --force to replace them")]
    ResultsExist(PathBuf),

    #[error("{0} is not implemented")]
    Unimplemented(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter(message.into())
    }

    /// Errors caused by bad user input rather than a failure while running.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::MissingDirectory(_)
                | Error::EmptyDirectory(_)
                | Error::VocabularyTooLarge { .. }
                | Error::ArityExceedsVocabulary { .. }
                | Error::UnsupportedArity(_)
                | Error::InvalidParameter(_)
                | Error::RankOutOfRange { .. }
                | Error::MalformedConjunction(_)
                | Error::ResultsExist(_)
        )
    }
}
