use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed NPY header: {0}")]
    MalformedHeader(String),
    #[error("unsupported NPY layout: {0}")]
    UnsupportedLayout(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteData { row: usize, col: usize },
    #[error("invalid matrix shape: {0}")]
    InvalidShape(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("ragged CSV: line {line} has {found} fields, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-numeric CSV cell {cell:?} at line {line}")]
    NonNumericCell { line: usize, cell: String },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("entropy of an empty column")]
    EmptyColumn,
    #[error("digamma argument must be positive, got {0}")]
    NonPositiveArgument(f64),
    #[error("need more than k={k} samples, got {samples}")]
    TooFewSamples { samples: usize, k: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("rank correlation undefined: one input is constant")]
    AllTied,
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
    #[error("model ids do not match: {0}")]
    IdMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    DivergedTraining { epoch: usize },
    #[error("layer {layer} out of range (model has {hidden} hidden layers)")]
    LayerOutOfRange { layer: usize, hidden: usize },
    #[error("input width {found} does not match model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the sweep setting that produced it.
    pub(crate) fn context(self, context: impl Into<String>) -> Self {
        Error::Run {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
