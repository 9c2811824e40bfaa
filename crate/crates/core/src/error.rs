use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Gaussian component: {0}")]
    InvalidComponent(String),

    #[error("invalid density model: {0}")]
    InvalidDensity(String),

    #[error("invalid prior: p0 = {0} must lie strictly inside (0, 1)")]
    InvalidPrior(f64),

    #[error("invalid interval: lo = {lo} > hi = {hi}")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("thresholds must be finite and strictly increasing: {0:?}")]
    InvalidThresholds(Vec<f64>),

    #[error("invalid search domain [{lo}, {hi}]: {reason}")]
    InvalidSearchDomain { lo: f64, hi: f64, reason: String },

    #[error("level a = {0} must lie inside (1e-9, 1 - 1e-9)")]
    InvalidLevel(f64),

    #[error("grid needs at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("degenerate channel at a = {a}: f = {f}, g = {g} (logs unbounded, move a inward)")]
    DegenerateChannel { a: f64, f: f64, g: f64 },

    #[error("no sign change of the stationarity function: {diagnosis}")]
    NoSignChange { diagnosis: String },

    #[error("bisection did not converge within {max_iter} iterations (bracket width {width})")]
    NotConverged { max_iter: usize, width: f64 },

    #[error("invalid bracket [{lo}, {hi}]: {reason}")]
    InvalidBracket { lo: f64, hi: f64, reason: String },

    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(String),

    #[error("oracle supports 1 to 3 thresholds, got {0}")]
    TooManyThresholds(usize),

    #[error("invalid oracle parameter: {0}")]
    InvalidOracleParameter(String),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
