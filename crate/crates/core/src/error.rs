use thiserror::Error;

/// Errors produced by the core library.
///
/// The variants fall into three families that callers map to exit codes or
/// HTTP statuses: input problems (malformed tables, bad arguments), data
/// problems (collinearity, degenerate residuals) and infeasible bounds.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("column '{column}' is not numeric (row {row}: '{value}')")]
    NonNumeric {
        column: String,
        row: usize,
        value: String,
    },

    #[error("column '{0}' not found")]
    MissingColumn(String),

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("collinear regressors: column '{column}' is (numerically) a linear combination of earlier columns")]
    Collinear { column: String },

    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible adjustment point: {0}")]
    InfeasiblePoint(String),

    #[error("sampling oracle found no feasible point in {samples} samples")]
    OracleFailure { samples: usize },

    #[error("unsupported format '{0}'")]
    UnsupportedFormat(String),
}

impl Error {
    /// Coarse classification used by the CLI and the HTTP service.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Input(_)
            | Error::NonNumeric { .. }
            | Error::MissingColumn(_)
            | Error::UnsupportedFormat(_)
            | Error::Domain(_) => ErrorKind::Input,
            Error::Degenerate(_)
            | Error::Collinear { .. }
            | Error::InfeasiblePoint(_)
            | Error::OracleFailure { .. } => ErrorKind::Data,
            Error::InfeasibleBounds(_) => ErrorKind::Bounds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Data,
    Bounds,
}

pub type Result<T> = std::result::Result<T, Error>;
