use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("field overflow: {0}")]
    FieldOverflow(&'static str),

    #[error("keep width {0} outside 1..=23")]
    KeepWidth(u32),

    #[error("sample stride must be at least 1")]
    InvalidStride,

    #[error("{present} symbols do not fit in codes of at most {max_len} bits")]
    Capacity { present: usize, max_len: u32 },

    #[error("code lengths violate the Kraft inequality")]
    KraftViolation,

    #[error("code length {len} exceeds the maximum code width {max_len}")]
    CodeTooLong { len: u32, max_len: u32 },

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("symbol {symbol} (element {index}) is missing from the code table")]
    MissingSymbol { symbol: u16, index: usize },

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("payload too short: need {needed} bytes, have {available}")]
    ShortPayload { needed: usize, available: usize },

    #[error("row {row} out of range ({rows} rows)")]
    RowOutOfRange { row: usize, rows: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("truncated input at byte offset {offset}: {msg}")]
    Truncated { offset: usize, msg: String },

    #[error("duplicate token {0:?}")]
    DuplicateToken(String),

    #[error("invalid container: {0}")]
    Container(String),

    #[error("payload checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by an invalid format configuration rather than
    /// by the data being processed.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::KeepWidth(_)
                | Error::InvalidStride
                | Error::Capacity { .. }
                | Error::InvalidArgument(_)
        )
    }
}
