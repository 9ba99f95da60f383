use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("custom Orlicz functions carry only derivatives at 1 and cannot be evaluated")]
    UnsupportedEvaluation,

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("time step violates the stability bound; at least {required} substeps are needed")]
    Unstable { required: usize },

    #[error("time step {dt} exceeds the monotone bound {bound}; reduce the step")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("non-finite value at vertex (i={i}, j={j}, k={k})")]
    BlowUp { i: usize, j: usize, k: usize },

    #[error("negative value {value} at vertex (i={i}, j={j}, k={k}); use a smaller time step")]
    Positivity {
        i: usize,
        j: usize,
        k: usize,
        value: f64,
    },

    #[error("stationary density collapses onto the {0} boundary cell")]
    BoundaryCollapse(&'static str),

    #[error("singular closed form: denominator vanishes at t = {t}")]
    Singular { t: f64 },

    #[error("t = {t} lies outside the table range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
