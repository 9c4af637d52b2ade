use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("row {row}: cannot parse {what} `{text}`")]
    Parse {
        row: usize,
        what: &'static str,
        text: String,
    },

    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),

    #[error("dates are not strictly increasing at {0}")]
    UnorderedDates(NaiveDate),

    #[error("non-finite value at {0}")]
    NonFinite(NaiveDate),

    #[error("non-positive value {value} at {date}; cannot take logarithm")]
    NonPositive { date: NaiveDate, value: f64 },

    #[error("monthly series has more than one observation in {year}-{month:02}")]
    MonthlyCollision { year: i32, month: u32 },

    #[error("no usable rows")]
    Empty,

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("calendars do not overlap")]
    EmptyIntersection,

    #[error("covariate `{name}` has no value for {year}-{month:02}")]
    MissingPeriod {
        name: String,
        year: i32,
        month: u32,
    },

    #[error("covariate `{name}` has no value on {date}")]
    MissingDay { name: String, date: NaiveDate },

    #[error("covariate `{name}`: {reason}")]
    CovariateHistory { name: String, reason: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("singular design matrix")]
    Singular,

    #[error("objective is not finite at any starting point")]
    NoFiniteStart,

    #[error("parameter point is infeasible: {0}")]
    Infeasible(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
