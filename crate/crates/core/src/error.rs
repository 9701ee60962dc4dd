use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("negative position x = {0}")]
    NegativePosition(f64),

    #[error("moment exponent p = {0} outside (0, 1)")]
    ExponentOutOfRange(f64),

    #[error("divergent moment: power tail exponent q = {q} requires p < q - 1, got p = {p}")]
    DivergentMoment { p: f64, q: f64 },

    #[error("invalid wavenumber {re}{im:+}i: {reason}")]
    InvalidWavenumber { re: f64, im: f64, reason: &'static str },

    #[error("integrator failure at x = {x}: {reason}")]
    Integrator { x: f64, reason: String },

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("zero of the determinant too close to the contour near k = {re}{im:+}i")]
    ZeroOnContour { re: f64, im: f64 },

    #[error("phase unwrapping failed between k = {from} and k = {to}")]
    Unwrap { from: String, to: String },

    #[error("pole proximity: |k - conj(k_j)| = {0:e}")]
    PoleProximity(f64),

    #[error("invalid zero set: {0}")]
    InvalidZeroSet(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
