use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed JSON. `offset` is the byte offset into the input.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// An annotation references an image or category that does not exist,
    /// or an id is duplicated.
    #[error("referential integrity error for annotation {annotation_id}: {message}")]
    Integrity { annotation_id: i64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("rle codec error: {0}")]
    Codec(String),

    #[error("mask dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("operation requires a nonempty mask")]
    EmptyMask,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input content rather than the filesystem.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
