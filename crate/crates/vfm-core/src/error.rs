use std::fmt;
use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug)]
pub enum Error {
    /// Tensor or sequence shapes do not line up.
    Dimension(String),
    /// A configuration value is out of range or inconsistent.
    InvalidConfig(String),
    /// Input data violates an invariant (bad timestamps, negative rates, ...).
    Data(String),
    /// A delimited text file failed to parse; `line` is 1-based.
    Csv { line: usize, message: String },
    /// Filesystem failure, annotated with the offending path.
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Loss or gradient became NaN/Inf during training.
    NonFinite {
        epoch: usize,
        sequence: usize,
        what: String,
    },
    /// Checkpoint header does not declare a supported format version.
    CheckpointVersion(String),
    /// Checkpoint body could not be parsed; `line` is 1-based.
    CheckpointMalformed { line: usize, message: String },
    /// Checkpoint tensors disagree with the declared configuration.
    CheckpointShape(String),
    /// Stitching found sample ranges covered by no forecast sequence.
    CoverageGap { ranges: Vec<(usize, usize)> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Data(msg) => write!(f, "invalid data: {msg}"),
            Error::Csv { line, message } => write!(f, "csv error at line {line}: {message}"),
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
            Error::NonFinite {
                epoch,
                sequence,
                what,
            } => write!(
                f,
                "non-finite {what} at epoch {epoch}, sequence {sequence}; training aborted"
            ),
            Error::CheckpointVersion(found) => {
                write!(
                    f,
                    "unsupported checkpoint version: expected 'VFMNN v1', found '{found}'"
                )
            }
            Error::CheckpointMalformed { line, message } => {
                write!(f, "malformed checkpoint at line {line}: {message}")
            }
            Error::CheckpointShape(msg) => write!(f, "checkpoint shape mismatch: {msg}"),
            Error::CoverageGap { ranges } => {
                write!(f, "forecast coverage gaps at sample ranges {ranges:?}")
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
