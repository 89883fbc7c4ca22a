//! Error type shared by every module in the crate.
//!
//! The crate performs no I/O; all failures are either malformed text
//! (`Format`) or inputs that violate a documented contract (everything else).
//! Binaries map the whole enum to a "validation" exit class.

/// Errors produced by parsing, preprocessing, feature extraction, alignment,
/// scoring, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Text input does not match the expected file format.
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    /// Input is well-formed but violates a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// A sequence is shorter than the operation requires.
    #[error("input too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    /// A signature spans zero time, so no sampling rate can be established.
    #[error("degenerate duration: all timestamps are equal")]
    DegenerateDuration,

    /// A coordinate range collapses to a point, so scaling is undefined.
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Filtering removed every sample.
    #[error("empty signature: {0}")]
    EmptySignature(String),

    /// Two inputs that must share a channel layout do not.
    #[error("channel mismatch: {0}")]
    ChannelMismatch(String),

    /// Requested truncation depth for the path signature is out of range.
    #[error("unsupported path-signature depth {0} (supported range is 1..=4)")]
    UnsupportedDepth(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
