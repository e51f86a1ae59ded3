use thiserror::Error;

/// Errors raised by the outfitter library.
///
/// Validation variants carry the document path of the offending element
/// (for example `categories[3].id` or `records[12].regions[0].category`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("catalog error at {path}: {message}")]
    Catalog { path: String, message: String },

    #[error("annotation error at {path}: {message}")]
    Annotation { path: String, message: String },

    #[error("model error at {path}: {message}")]
    Model { path: String, message: String },

    #[error("unknown occasion {0:?}")]
    UnknownOccasion(String),

    #[error("image not found: {0:?}")]
    ImageNotFound(String),

    #[error("feature space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no records for gender {gender} and occasion {occasion:?}")]
    EmptySlice { gender: String, occasion: String },
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn catalog(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Catalog {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn annotation(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Annotation {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn model(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Model {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
