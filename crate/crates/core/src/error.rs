use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("table `{0}` already exists")]
    DuplicateTableName(String),
    #[error("no such table `{0}`")]
    UnknownTable(String),
    #[error("invalid table name `{0}`")]
    InvalidTableName(String),
    #[error("split points must be strictly ascending (violation at index {index})")]
    UnsortedSplits { index: usize },
    #[error("entries with value zero cannot be stored")]
    ZeroValueEntry,
    #[error("entries must have a non-empty row")]
    EmptyRow,
    #[error("table `{0}` is empty")]
    EmptyTable(String),
    #[error("table `{0}` must be empty")]
    OutputNotEmpty(String),
    #[error("output table `{0}` aliases an input table")]
    AliasedOutput(String),
    #[error("table `{0}` has no combiner installed")]
    MissingCombiner(String),
    #[error("table `{table}` combines with `{found}` but the semiring adds with `{expected}`")]
    CombinerMismatch {
        table: String,
        expected: &'static str,
        found: &'static str,
    },
    #[error("input stream `{0}` is not key-sorted")]
    UnsortedInput(&'static str),
    #[error("overflow in semiring multiply")]
    MultiplyOverflow,
    #[error("overflow in combiner `{0}`")]
    AddOverflow(&'static str),
    #[error("row of the buffered table exceeds {cap} entries")]
    RowBufferOverflow { cap: usize },
    #[error("baseline rate must be positive")]
    ZeroBaseline,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
