use std::path::PathBuf;

use crate::index::DocId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("zero vector: norm below 1e-12 cannot be normalized")]
    ZeroVector,
    #[error("non-finite value at coordinate {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("duplicate document id {0}")]
    DuplicateId(String),
    #[error("index is frozen; no further insertions")]
    IndexFrozen,
    #[error("index must be frozen before searching")]
    NotFrozen,
    #[error("too few vectors to train: {found} < nlist {nlist}")]
    TooFewVectors { found: usize, nlist: usize },
    #[error("inverted-file index has not been trained")]
    NotTrained,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("capacity {0} exceeded")]
    CapacityExceeded(usize),
    #[error("query has no vectors")]
    EmptyQuery,
    #[error("backend {0} has not been built")]
    BackendMissing(&'static str),
    #[error("no relevance judgment for query {0}")]
    MissingJudgment(DocId),
    #[error("oracle returned {found} hits, fewer than k = {k}")]
    KMismatch { k: usize, found: usize },
    #[error("no observations")]
    Empty,
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("file truncated: expected {expected} bytes, found {found}")]
    TruncatedFile { expected: u64, found: u64 },
    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),
    #[error("catalog row {row} out of range for {count} embeddings")]
    RowOutOfRange { row: u32, count: u32 },
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("snapshot holds a {found} index, expected {expected}")]
    TypeMismatch { expected: &'static str, found: &'static str },
    #[error("corrupt data: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Stable machine-readable category, used as the CLI's error prefix.
    pub fn category(&self) -> &'static str {
        match self {
            Error::ZeroVector => "zero_vector",
            Error::NonFinite(_) => "non_finite",
            Error::DimMismatch { .. } => "dim_mismatch",
            Error::DuplicateId(_) => "duplicate_id",
            Error::IndexFrozen => "index_frozen",
            Error::NotFrozen => "not_frozen",
            Error::TooFewVectors { .. } => "too_few_vectors",
            Error::NotTrained => "not_trained",
            Error::InvalidParam(_) => "invalid_param",
            Error::CapacityExceeded(_) => "capacity_exceeded",
            Error::EmptyQuery => "empty_query",
            Error::BackendMissing(_) => "backend_missing",
            Error::MissingJudgment(_) => "missing_judgment",
            Error::KMismatch { .. } => "k_mismatch",
            Error::Empty => "empty",
            Error::BadMagic { .. } => "bad_magic",
            Error::TruncatedFile { .. } => "truncated_file",
            Error::VersionUnsupported(_) => "version_unsupported",
            Error::RowOutOfRange { .. } => "row_out_of_range",
            Error::ChecksumMismatch { .. } => "checksum_mismatch",
            Error::TypeMismatch { .. } => "type_mismatch",
            Error::Corrupt(_) => "corrupt",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
