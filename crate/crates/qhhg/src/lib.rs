//! Intraband high-harmonic generation in a one-band crystal driven by
//! quantum light (coherent, thermal, Fock, bright-squeezed-vacuum).
//!
//! The crate computes harmonic spectra as phase-space averages of
//! semiclassical spectra, analytic Floquet peak weights, the cutoff law,
//! perturbative power scaling, and time-resolved statistics of the
//! generated electric field. All quantities are in atomic units unless
//! noted otherwise.

pub mod analysis;
pub mod appcheck;
pub mod band;
pub mod config;
pub mod drive;
pub mod efield;
pub mod phasespace;
pub mod quad;
pub mod run;
pub mod specfun;
pub mod spectrum;

/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT: f64 = 137.035999084;

/// One atomic unit of time in femtoseconds.
pub const AU_TIME_FS: f64 = 0.024189;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QhhgError {
    #[error("invalid band parameter: {0}")]
    Band(String),
    #[error("invalid field parameter: {0}")]
    Field(String),
    #[error("coherent field has a point-mass distribution; no pointwise density")]
    CoherentPointMass,
    #[error("bessel request outside supported envelope: n={n}, x={x}")]
    BesselEnvelope { n: i64, x: f64 },
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("non-finite intermediate in {0}")]
    NonFinite(String),
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("missing required config key `{0}`")]
    MissingKey(String),
    #[error("{0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QhhgError>;
