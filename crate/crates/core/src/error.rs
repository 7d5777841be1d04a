use thiserror::Error;

/// Coarse classification of failures, used by the command line front end to
/// pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The request itself is malformed (bad parameter, impossible dimension).
    Usage,
    /// The input data is unusable (parse failure, missing labels, I/O).
    Data,
    /// A numerical routine failed (non-convergence, asymmetric input).
    Numeric,
}

#[derive(Debug, Error)]
pub enum FinderError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("{what} needs at least {needed} samples, found {found}")]
    InsufficientSamples {
        what: &'static str,
        needed: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric (max |a_ij - a_ji| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("only {available} independent directions available, {requested} requested")]
    RankDeficient { requested: usize, available: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("solver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: missing label")]
    MissingLabel { row: usize },

    #[error("column '{0}' has no observed values")]
    FullyMissingColumn(String),

    #[error("{0}")]
    Format(String),

    #[error("round (test_a = {test_a}, test_b = {test_b}) failed: {source}")]
    Round {
        test_a: usize,
        test_b: usize,
        #[source]
        source: Box<FinderError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl FinderError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            FinderError::DimensionMismatch { .. }
            | FinderError::InvalidParameter(_)
            | FinderError::RankDeficient { .. } => ErrorKind::Usage,
            FinderError::NotSymmetric { .. } | FinderError::NoConvergence { .. } => {
                ErrorKind::Numeric
            }
            FinderError::Round { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}

pub type Result<T> = std::result::Result<T, FinderError>;
