//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty polynomial")]
    EmptyPolynomial,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("confluent poles")]
    ConfluentPoles,

    #[error("lossless resonance")]
    LosslessResonance,

    #[error("active medium: chi = {chi} at omega = {omega} rad/s")]
    ActiveMedium { chi: f64, omega: f64 },

    #[error("unphysical coupling: no positive dipole frequency solves the matching equation")]
    UnphysicalCoupling,

    #[error("unstable matched model: pole {pole} has non-negative real part")]
    UnstableModel { pole: String },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions: \
         best estimate {estimate} with error bound {error_bound}"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("ODE step size underflow at t = {t}: {len} points computed")]
    StepSizeUnderflow { t: f64, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
