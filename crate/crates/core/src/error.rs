use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid constants: {0}")]
    InvalidConstants(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    /// The density fell to (or below) the floor at a grid point.
    #[error("node at index {index:?} (x = {position:?}): density {density:e} is below the floor {floor:e}")]
    Node {
        index: Vec<usize>,
        position: Vec<f64>,
        density: f64,
        floor: f64,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid run parameters: {0}")]
    InvalidRun(String),

    #[error("numerical blow-up after {step} steps (t = {time}): {reason}")]
    BlowUp {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration-class errors map to exit status 2, numerical ones to 3.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::BlowUp { .. } | Error::Node { .. })
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
