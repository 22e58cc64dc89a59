use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("t = {t} lies outside the profile domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("profile value is not finite at t = {t}")]
    NonFinite { t: f64 },

    #[error("finite-difference stencil of width {step} at t = {t} leaves the domain")]
    BoundaryProximity { t: f64, step: f64 },

    #[error("derivative of order {order} is not available")]
    UnsupportedOrder { order: usize },

    #[error("quadrature failed on [{a}, {b}]: {reason}")]
    QuadratureFailure { a: f64, b: f64, reason: String },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("dimension n = {n} is below the required minimum {min}")]
    DegenerateDimension { n: usize, min: usize },

    #[error("no positive Green's function: the end is parabolic ({0})")]
    NoGreenFunction(String),

    #[error("degenerate point at t = {t}: {reason}")]
    DegeneratePoint { t: f64, reason: String },

    #[error("value {value} outside tabulated range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("eigensolver failed: {0}")]
    Solver(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("warping function reached zero at t = {t}")]
    ZeroCrossing { t: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("diagnostics: {0}")]
    Diagnostics(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
