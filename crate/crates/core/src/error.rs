//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Result`]. Variants carry
//! enough context (column names, offending lags, date spans) for a caller to
//! report the failure without re-deriving it, and [`Error::kind`] buckets the
//! variants into coarse categories that front-ends can map to exit codes.

use chrono::NaiveDate;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error category, used by front-ends to map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Input/output failure (file system, CSV transport).
    Io,
    /// Input shape problems: missing columns, mismatched names, bad headers.
    Schema,
    /// A cell or field failed to parse.
    Parse,
    /// A run of missing days too long to fill.
    Gap,
    /// Not enough observations for the requested computation.
    InsufficientData,
    /// Numerically degenerate input: zero variance, collinear regressors,
    /// singular covariance.
    Degenerate,
    /// An argument outside its documented range (lag, horizon, level, ...).
    InvalidArgument,
}

/// Errors produced by frame construction, statistics, model fitting,
/// forecasting, backtesting, and ingestion.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("frame must contain at least one row and one column")]
    EmptyFrame,

    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("dates must be consecutive calendar days: {prev} is followed by {next}")]
    NonConsecutiveDates { prev: NaiveDate, next: NaiveDate },

    #[error("duplicate column name {name:?}")]
    DuplicateName { name: String },

    #[error("non-finite value in column {column:?} at row {row}")]
    NonFiniteValue { row: usize, column: String },

    #[error("unknown column {name:?}")]
    UnknownColumn { name: String },

    #[error("column names {got:?} do not match expected {expected:?}")]
    NameMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },

    #[error("insufficient data for {context}: need at least {needed} observations, got {got}")]
    InsufficientData {
        context: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("invalid lag {lag} for {context}: must be in 1..={limit}")]
    InvalidLag {
        lag: usize,
        limit: usize,
        context: &'static str,
    },

    #[error("invalid differencing order {order} for series of length {len}")]
    InvalidOrder { order: usize, len: usize },

    #[error("column {name:?} has zero variance")]
    DegenerateColumn { name: String },

    #[error("degenerate series for {context}: sample variance is zero")]
    DegenerateSeries { context: &'static str },

    #[error("regressor series has zero variance")]
    DegenerateRegressor,

    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(
        "Ljung-Box degrees of freedom must be positive: lags {lags} \
         must exceed fitted parameter count {fitted_params}"
    )]
    InvalidDof { lags: usize, fitted_params: usize },

    #[error("collinear regressors: {}", columns.join(", "))]
    Collinearity { columns: Vec<String> },

    #[error("residual covariance is singular or not positive definite")]
    DegenerateCovariance,

    #[error("lag selection failed at candidate lag {lag}: {source}")]
    LagSelection {
        lag: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid forecast horizon {horizon}: must be at least 1")]
    InvalidHorizon { horizon: usize },

    #[error("invalid confidence level {level}: must lie strictly between 0 and 1")]
    InvalidLevel { level: f64 },

    #[error("invalid cutoff {cutoff}: {reason}")]
    InvalidCutoff { cutoff: NaiveDate, reason: String },

    #[error("backtest at cutoff {cutoff} failed: {source}")]
    BacktestCutoff {
        cutoff: NaiveDate,
        #[source]
        source: Box<Error>,
    },

    #[error("{file}: {detail}")]
    Schema { file: String, detail: String },

    #[error("{file}, row {row}, column {column:?}: {detail}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        detail: String,
    },

    #[error("unfillable gap in {column}: {start} through {end} ({days} consecutive missing days)")]
    UnfillableGap {
        column: String,
        start: NaiveDate,
        end: NaiveDate,
        days: usize,
    },

    #[error("input files share no overlapping dates in the requested range")]
    EmptyJoin,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV transport error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// The coarse category this error belongs to.
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            Io(_) | File { .. } | Csv(_) => ErrorKind::Io,
            Json(_) => ErrorKind::Parse,
            EmptyFrame | DimensionMismatch { .. } | NonConsecutiveDates { .. }
            | DuplicateName { .. } | UnknownColumn { .. } | NameMismatch { .. }
            | Schema { .. } => ErrorKind::Schema,
            NonFiniteValue { .. } | Parse { .. } => ErrorKind::Parse,
            UnfillableGap { .. } => ErrorKind::Gap,
            InsufficientData { .. } | EmptyJoin => ErrorKind::InsufficientData,
            LengthMismatch { .. } => ErrorKind::Schema,
            DegenerateColumn { .. } | DegenerateSeries { .. } | DegenerateRegressor
            | Collinearity { .. } | DegenerateCovariance => ErrorKind::Degenerate,
            InvalidLag { .. } | InvalidOrder { .. } | InvalidDof { .. }
            | InvalidHorizon { .. } | InvalidLevel { .. } | InvalidCutoff { .. } => {
                ErrorKind::InvalidArgument
            }
            LagSelection { source, .. } | BacktestCutoff { source, .. } => source.kind(),
        }
    }
}
