use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input was not well-formed JSON.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// A record violated the annotation schema or one of its invariants.
    #[error("validation error in frame '{frame_id}', field '{field}': {message}")]
    Validation {
        frame_id: String,
        field: String,
        message: String,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn validation(
        frame_id: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Validation {
            frame_id: frame_id.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}
