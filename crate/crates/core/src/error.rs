use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed text input. `line` is 1-based.
    #[error("{message} at line {line}")]
    Parse { line: usize, message: String },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("average degree {target} unreachable: closest achievable is {achieved:.4}")]
    DegreeUnreachable { target: f64, achieved: f64 },

    #[error("generation failed after {attempts} attempts: {reason}")]
    RetriesExhausted { attempts: u32, reason: String },

    #[error("sensing radius below pixel resolution ({rs_pixels:.4} px)")]
    SensingBelowResolution { rs_pixels: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("annotation mismatch: {0}")]
    AnnotationMismatch(String),

    #[error("unknown overlay kind `{0}`")]
    UnknownOverlay(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Config(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
