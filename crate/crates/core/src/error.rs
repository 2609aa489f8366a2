use thiserror::Error;

/// Errors produced by the library.
///
/// The [`Error::is_io_or_parse`] split mirrors the CLI exit-code contract:
/// I/O and format failures map to exit 2, contract violations to exit 1.
#[derive(Error, Debug)]
pub enum Error {
    /// An argument violated an operation's contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A word in the frequency map has no segmentation entry.
    #[error("missing segmentation for word `{0}`")]
    MissingSegmentation(String),

    /// A base merge table could not be replayed against the given corpus.
    #[error("merge table inconsistent with corpus: op {rank} ({left} {right}) never occurs adjacently")]
    InconsistentBase {
        rank: usize,
        left: String,
        right: String,
    },

    /// Configuration rejected at construction time.
    #[error("invalid configuration: {0}")]
    Configuration(String),

    /// A transition was requested from a state that forbids it.
    #[error("state machine error: {0}")]
    StateMachine(String),

    /// A new symbol's component is not present in the embedding matrix.
    #[error("missing component `{component}` for new symbol `{symbol}`")]
    MissingComponent { symbol: String, component: String },

    /// Training produced non-finite values.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A mean or fraction is undefined on the given input.
    #[error("undefined on degenerate input: {0}")]
    Degenerate(String),

    /// A data file does not match its declared format.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that stem from reading, writing or decoding data
    /// rather than from a violated operation contract.
    pub fn is_io_or_parse(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Parse(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
