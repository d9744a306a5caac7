use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} ({left_w}x{left_h} vs {right_w}x{right_h})")]
    DimensionMismatch {
        what: &'static str,
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("image too small for requested K̂ ({k_hat} superpixels on {pixels} pixels)")]
    ImageTooSmall { k_hat: usize, pixels: usize },

    #[error("depth field has {0} invalid pixels; run completion first")]
    IncompleteDepth(usize),

    #[error("unfittable: {0}")]
    Unfittable(&'static str),

    #[error("no depth anchors: no reliable superpixel with a fitted plane")]
    NoDepthAnchors,

    #[error("superpixel {0} has no depth plane")]
    MissingPlane(usize),

    #[error("nothing to evaluate: every class is absent")]
    NothingToEvaluate,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
