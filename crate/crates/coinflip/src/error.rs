//! Error type shared across the crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug)]
pub enum Error {
    /// A constructor or operation received an argument outside its domain
    /// (probability out of `[0, 1]`, non-finite ratio, zero grid, ...).
    InvalidParameter(String),
    /// A pattern was shorter than an operation required.
    PatternTooShort { len: usize, needed: usize },
    /// Enumeration was requested for a family-size cap too large to expand.
    EnumerationTooLarge { max_children: usize, limit: usize },
    /// A conditional probability was requested given an event of probability
    /// zero under the distribution at hand.
    ConditioningOnNull(String),
    /// An estimator or test had an empty stratum / zero denominator; the
    /// message names the missing quantity.
    InsufficientData(String),
    /// A proportion test was asked to test against a degenerate null (0 or 1).
    DegenerateNull(f64),
    /// A numeric function was evaluated outside its domain.
    Domain(String),
    /// A counts (or policy table) file failed to parse; cites the 1-based
    /// line number and the offending content.
    CountsParse { line: usize, message: String },
    /// The same pattern appeared twice in one counts file or counts map.
    DuplicatePattern(String),
    /// Underlying I/O failure while reading or writing a file.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::PatternTooShort { len, needed } => {
                write!(f, "pattern has length {len}, but {needed} children are required")
            }
            Error::EnumerationTooLarge { max_children, limit } => write!(
                f,
                "cannot enumerate patterns up to {max_children} children (limit {limit}): \
                 2^{max_children} leaves is past the resource guard"
            ),
            Error::ConditioningOnNull(event) => {
                write!(f, "conditioning event has probability zero: {event}")
            }
            Error::InsufficientData(what) => write!(f, "insufficient data: {what}"),
            Error::DegenerateNull(p0) => {
                write!(f, "degenerate null proportion {p0}; the test requires 0 < p0 < 1")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::CountsParse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::DuplicatePattern(p) => write!(f, "duplicate pattern: {p}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
