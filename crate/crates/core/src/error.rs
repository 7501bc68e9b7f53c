use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid mollifier scale alpha = {alpha} (must be > 0)")]
    InvalidScale { alpha: f64 },

    #[error("invalid integration range [{a}, {b}]")]
    InvalidRange { a: f64, b: f64 },

    #[error("quadrature did not converge: estimate {estimate}, residual {residual}")]
    Convergence { estimate: f64, residual: f64 },

    #[error("point {x} is outside the open unit interval")]
    Domain { x: f64 },

    #[error("function value at {x} is not finite ({value})")]
    NotFinite { x: f64, value: f64 },

    #[error("value {y} is not attained on the open unit interval (sampled range [{lo}, {hi}])")]
    NotAttained { y: f64, lo: f64, hi: f64 },

    #[error("finite-difference stencil at x = {x} with h = {h} leaves the open unit interval; use a smaller step")]
    Stencil { x: f64, h: f64 },

    #[error("family parameter t = {t} is outside ]-1/4, 1/4[")]
    ParameterRange { t: f64 },

    #[error("vector field is not finite at t = {t}, x = {x}")]
    Field { t: f64, x: f64 },

    #[error("non-finite state at t = {t} before blowup classification (s = {s})")]
    Integration { t: f64, s: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("expression error: {0}")]
    Expression(String),
}

pub type Result<T> = std::result::Result<T, Error>;
