use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frequency {omega} is outside the tabulated range [{min}, {max}]")]
    OutOfRange { omega: f64, min: f64, max: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (value {value:e}, error estimate {error:e})"
    )]
    Convergence {
        /// Magnitude of the partial result.
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("series truncated at l = {l_max} without meeting the tail criterion (tail ratio {tail:e})")]
    Truncation { l_max: usize, tail: f64 },

    #[error("reflection denominator vanished at k_par = {k_par:e} (pole on the integration path)")]
    PoleProximity { k_par: f64 },

    #[error("passivity violated: {0}")]
    Passivity(String),

    #[error("spectral support not covered: {0}")]
    Coverage(String),
}

pub type Result<T> = std::result::Result<T, Error>;
