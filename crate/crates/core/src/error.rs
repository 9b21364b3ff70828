use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library. Variant names double as the stable error
/// kinds reported by the command line tool.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {index} has a non-finite coordinate")]
    NonFiniteCoordinate { index: usize },
    #[error("query point is not finite")]
    InvalidQuery,
    #[error("rigid fit needs at least 3 pairs, got {0}")]
    InsufficientPairs(usize),
    #[error("rigid fit input lengths disagree: {source_len} source, {target_len} target, {weights_len} weights")]
    LengthMismatch {
        source_len: usize,
        target_len: usize,
        weights_len: usize,
    },
    #[error("weight {index} is not a finite positive number")]
    InvalidWeight { index: usize },
    #[error("degenerate configuration: rotation is not uniquely determined")]
    DegenerateConfiguration,
    #[error("not a proper rotation: {0}")]
    InvalidRotation(String),
    #[error("kernel width must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("image is {width}x{height}, need at least 3x3")]
    ImageTooSmall { width: usize, height: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("disparity map has no valid pixels")]
    NoValidDisparities,
    #[error("contour point {0} has a zero direction vector")]
    InvalidDirection(usize),
    #[error("contour point {0} lies outside the image")]
    PositionOutOfBounds(usize),

    #[error("scene has {0} points after corruption, need at least 3")]
    DegenerateScene(usize),
    #[error("disparity {value} at pixel {index} is outside [0, {max}]")]
    DisparityOutOfRange { index: usize, value: i64, max: i64 },

    #[error("{path}: line {line}: {message}")]
    PlyParseError {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: header declares {expected} vertices but {found} were found")]
    PlyCountMismatch {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("{path}: unsupported PGM ({message})")]
    UnsupportedPgm { path: PathBuf, message: String },
    #[error("{path}: PGM payload truncated, expected {expected} bytes, found {found}")]
    PgmTruncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("{path}: {message}")]
    InvalidRecord { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
