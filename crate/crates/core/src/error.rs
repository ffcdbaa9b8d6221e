use thiserror::Error;

/// Failures reported by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("quadrature did not converge on [{a}, {b}]: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("root bracket failure: lo={lo}, hi={hi}, f(lo)={f_lo:e}, f(hi)={f_hi:e}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("invariant {name} violated at {location}")]
    Invariant { name: String, location: String },

    #[error("step control failure at t={t}: {detail}")]
    StepControl { t: f64, detail: String },

    #[error("ill-conditioned point (t={t}, x1={x1}, x2={x2}): denominator ratio {ratio:e}")]
    IllConditioned { t: f64, x1: f64, x2: f64, ratio: f64 },

    #[error("insufficient data: {0}")]
    Data(String),

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}
