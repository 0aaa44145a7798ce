use std::path::PathBuf;

use crate::trace::SensorType;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("trace `{trace_id}` has fewer than 2 samples after cleaning")]
    EmptyTrace { trace_id: String },

    #[error("trace `{trace_id}` has a non-finite sample at index {index}")]
    NonFiniteValue { trace_id: String, index: usize },

    #[error("trace `{trace_id}` spans less than one {window_len} s window")]
    NoWindows { trace_id: String, window_len: f64 },

    #[error("window length must be positive, got {0}")]
    InvalidWindowLength(f64),

    #[error("feature mask selects no features")]
    EmptyMask,

    #[error("invalid forest configuration: {0}")]
    InvalidConfig(String),

    #[error("feature schema mismatch: expected {expected}, got {found}")]
    SchemaMismatch { expected: String, found: String },

    #[error("dataset is invalid: {0}")]
    InvalidDataset(String),

    #[error("probabilities sum to {sum}, not 1")]
    UnnormalizedProbabilities { sum: f64 },

    #[error("no misclassified instances, true-positive rate is undefined")]
    NoMisclassified,

    #[error("no correctly classified instances, false-positive rate is undefined")]
    NoCorrect,

    #[error("fraction {fraction} leaves the {side} set empty")]
    DegenerateFraction { fraction: f64, side: &'static str },

    #[error("thresholds must be non-empty and ascending")]
    InvalidThresholds,

    #[error("no trace yields a window of {window_len} s")]
    EmptyCurvePoint { window_len: f64 },

    #[error("class {0} has no training instances")]
    MissingClass(SensorType),

    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),

    #[error("unknown sensor type `{0}`")]
    UnknownSensorType(String),

    #[error("stdin is not a terminal and no answer file was given")]
    NonInteractiveWithoutAnswers,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("unsupported model format: {0}")]
    ModelFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
