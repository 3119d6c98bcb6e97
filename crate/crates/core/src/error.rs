use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("label {0} is not binary (expected 0 or 1)")]
    NonBinaryLabel(u8),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("unseen category {value:?} in column {column:?}")]
    UnseenCategory { column: String, value: String },

    #[error("column {0:?} is not numeric")]
    NotNumeric(String),

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("class {class} has {count} rows; stratified split needs at least 2")]
    ClassTooSmall { class: u8, count: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no split occurred in any tree; importances are undefined")]
    NoSplits,

    #[error("no valid decision stump: every feature is constant")]
    NoValidStump,

    #[error("training diverged: non-finite {0}")]
    NonFinite(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// Checks that every label is 0 or 1.
pub(crate) fn check_binary(labels: &[u8]) -> Result<()> {
    match labels.iter().find(|&&l| l > 1) {
        Some(&l) => Err(Error::NonBinaryLabel(l)),
        None => Ok(()),
    }
}
