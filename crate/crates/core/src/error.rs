use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient data: {what} (found {found}, need at least {needed})")]
    InsufficientData {
        what: String,
        found: usize,
        needed: usize,
    },

    #[error("date {0} is not a panel date")]
    UnknownDate(NaiveDate),

    #[error("infeasible bounds: {0}")]
    Infeasible(String),

    #[error("{stage} did not converge after {iterations} iterations ({status})")]
    Convergence {
        stage: &'static str,
        iterations: usize,
        status: String,
        best: Vec<f64>,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("degenerate ratio: {0}")]
    DegenerateRatio(String),

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("on {date}: {source}")]
    OnDate {
        date: NaiveDate,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn on(self, date: NaiveDate) -> Self {
        Error::OnDate {
            date,
            source: Box::new(self),
        }
    }
}
