use std::fmt;

use chrono::NaiveDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where in an input file a problem was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    /// 1-based line number, header included.
    pub line: u64,
    pub column: Option<String>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.column {
            Some(c) => write!(f, "line {}, column '{}'", self.line, c),
            None => write!(f, "line {}", self.line),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("missing column '{0}' in header")]
    MissingColumn(String),
    #[error("{location}: cannot parse '{value}' as {expected}")]
    Parse {
        location: Location,
        value: String,
        expected: &'static str,
    },
    #[error("{location}: duplicate row for region '{region}' on {date}")]
    DuplicateRow {
        location: Location,
        region: String,
        date: NaiveDate,
    },
    #[error("{location}: negative value {value} in count column")]
    NegativeCount { location: Location, value: f64 },
    #[error("region '{region}' has no row for {date}")]
    MissingDay { region: String, date: NaiveDate },
    #[error("{location}: unknown colour '{colour}'")]
    UnknownColour { location: Location, colour: String },
    #[error("{location}: week_end {end} precedes week_start {start}")]
    InvertedWindow {
        location: Location,
        start: NaiveDate,
        end: NaiveDate,
    },
    #[error("region '{region}': label windows starting {first} and {second} overlap")]
    OverlappingWindows {
        region: String,
        first: NaiveDate,
        second: NaiveDate,
    },
    #[error("region '{0}' is labelled but absent from the daily panel")]
    UnknownRegion(String),
    #[error("region '{region}': window {start}..{end} has no daily data")]
    EmptyWindow {
        region: String,
        start: NaiveDate,
        end: NaiveDate,
    },
    #[error("no population entry for region '{0}'")]
    MissingPopulation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("column {0} has zero variance")]
    ZeroVariance(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite value at row {row}")]
    NonFinite { row: usize },
    #[error("eigensolver did not converge within {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },
    #[error("need at least two distinct label classes")]
    SingleClass,
    #[error("{predictors} predictors with {observations} observations is unidentifiable")]
    Unidentifiable { predictors: usize, observations: usize },
    #[error("region '{0}': every subset is invalid")]
    AllSubsetsInvalid(String),
    #[error("week starting {0} has a single remaining day")]
    WeekTooShort(NaiveDate),
    #[error("{failed} of {iterations} jackknife refits did not converge")]
    UnusableDistribution { failed: usize, iterations: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EigenNoConvergence { .. } | Error::NonFinite { .. } | Error::UnusableDistribution { .. } => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Input,
        }
    }
}
