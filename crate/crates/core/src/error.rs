use thiserror::Error;

/// Errors produced anywhere in the model, solver, fitting and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A quadrature or evaluation produced a non-finite value.
    #[error("numerical failure in {op}: {detail}")]
    Numerical { op: &'static str, detail: String },

    /// `b` is not below the existence bound and the caller asked to enforce it.
    #[error("b = {b} violates the contraction bound b < {b_max} at a = {a}")]
    BoundViolation { a: f64, b: f64, b_max: f64 },

    /// The envelope check was requested outside the region where it is proven.
    #[error("b = {b} exceeds the envelope bound b <= {b_max} at a = {a}")]
    HypothesisViolation { a: f64, b: f64, b_max: f64 },

    #[error("{method} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        last_change: f64,
    },

    /// The calibration equation for `a` has no positive root in the search bracket.
    #[error("no root of the calibration equation in ({lo:e}, {hi}]: {detail}")]
    NoRoot { lo: f64, hi: f64, detail: String },

    #[error("degenerate level set: {0}")]
    DegenerateLevelSet(String),

    #[error("apex not found: {0}")]
    ApexNotFound(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
