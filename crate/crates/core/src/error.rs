use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("file has no header or no data rows")]
    EmptyFile,
    #[error("target column `{0}` not found in header")]
    MissingTarget(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("cannot parse `{value}` at row {row}, column {col}")]
    ParseError { row: usize, col: usize, value: String },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("row index {index} out of bounds for {len} rows")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("design matrix is degenerate even after ridge fallback")]
    DegenerateDesign,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("probability {0} is not in (0, 1)")]
    InvalidProbability(f64),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { got: usize, need: usize },
    #[error("need at least 2 resampling splits, got {0}")]
    TooFewSplits(usize),
    #[error("feature {0} is constant; cannot build a multi-point grid")]
    ConstantFeature(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("feature index {index} out of range for {p} features")]
    InvalidFeature { index: usize, p: usize },

    #[error("fit failed on split {split}: {source}")]
    Fit {
        split: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("learners were not evaluated on the same plan: {0}")]
    PlanMismatch(String),
    #[error("estimates mix kinds or confidence levels")]
    MixedKinds,
    #[error("conditional sampling with several conditioning features needs a model")]
    MissingModel,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Whether the error stems from a numerical failure during fitting rather
    /// than from invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Fit { .. } | Error::DegenerateDesign)
    }

    pub(crate) fn at_split(self, split: usize) -> Error {
        match self {
            e @ Error::Fit { .. } => e,
            e => Error::Fit {
                split,
                source: Box::new(e),
            },
        }
    }
}
