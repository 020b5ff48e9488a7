use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong across ingestion, standardization, metric
/// evaluation, and report generation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    FileRead {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    FileWrite {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("malformed table {path}: {reason}")]
    MalformedTable { path: PathBuf, reason: String },

    #[error("duplicate document id {id:?}")]
    DuplicateDocument { id: String },

    #[error("document {id:?} has an empty author field")]
    MissingAuthor { id: String },

    #[error("document id {id:?} not present in the manifest")]
    UnknownDocument { id: String },

    #[error("document {id:?} produced no tokens")]
    EmptyDocument { id: String },

    #[error("corpus has {docs} document(s); at least 2 are required")]
    CorpusTooSmall { docs: usize },

    #[error("the allowed-script set is empty; no character could start a token")]
    EmptyScriptSet,

    #[error("invalid n-gram range {min}..={max}; need 1 <= min <= max")]
    InvalidNgramRange { min: usize, max: usize },

    #[error("duplicate token {token:?} in vocabulary")]
    DuplicateToken { token: String },

    #[error("requested {requested} most frequent words but only {available} are available")]
    MfwOutOfRange { requested: usize, available: usize },

    #[error("document {doc:?} has a zero total count over the selected vocabulary")]
    ZeroRowTotal { doc: String },

    #[error("every token column has zero variance; nothing left to standardize")]
    AllColumnsDropped,

    #[error("vocabulary mismatch: expected {expected} columns, found {found}")]
    VocabularyMismatch { expected: usize, found: usize },

    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{metric} requires {required} input but was given {found}")]
    ModeMismatch {
        metric: String,
        required: String,
        found: String,
    },

    #[error("row {row:?} is not a probability distribution (sums to {sum})")]
    NonStochastic { row: String, sum: f64 },

    #[error("zero probability at {what}; smooth with a positive epsilon before comparing")]
    ZeroProbability { what: String },

    #[error("cannot scale a zero-magnitude vector to unit length")]
    ZeroVector,

    #[error("rank-turbulence normalizer undefined: reference rank {reference} is not positive (n1={n1}, n2={n2})")]
    NormalizerUndefined { reference: f64, n1: usize, n2: usize },

    #[error("author {author:?} does not occur in the corpus")]
    UnknownAuthor { author: String },

    #[error("author {author:?} has {docs} document(s); at least {required} are required")]
    AuthorTooSmall {
        author: String,
        docs: usize,
        required: usize,
    },

    #[error("k = {k} is out of range for {n} document(s)")]
    KOutOfRange { k: usize, n: usize },

    #[error("invalid removal depths: {reason}")]
    InvalidKList { reason: String },

    #[error("removing top {k} tokens raised the distance from {before} to {after}")]
    RemovalIncreased { k: usize, before: f64, after: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed JSON in {path}: {source}")]
    MalformedJson {
        path: PathBuf,
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
