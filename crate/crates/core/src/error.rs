use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("{what} = {value} lies outside the dataset grid [{low}, {high}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("no dataset rows for wing {0}")]
    NotFound(String),

    #[error(
        "no pitch equilibrium in (-89, 89) deg for beta = {beta_deg} deg, V = {speed_mps} m/s"
    )]
    NoEquilibrium { beta_deg: f64, speed_mps: f64 },

    #[error("bisection did not converge within {iterations} iterations (|R| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("integration diverged at t = {t_s} s: {detail}")]
    Diverged { t_s: f64, detail: String },

    #[error("at t = {t_s} s: {source}")]
    AtTime {
        t_s: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Invalid {
        what,
        detail: detail.into(),
    }
}
