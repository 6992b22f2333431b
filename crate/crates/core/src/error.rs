use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BranchError {
    #[error("background invalid: {0}")]
    InvalidBackground(String),
    #[error("evaluation at branch point {0}")]
    Singular(C64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("elliptic modulus {0} outside [0, 1)")]
    Domain(f64),
    #[error("nome degenerates at modulus {0}")]
    DegenerateNome(f64),
    #[error("theta series did not reach precision within {terms} terms at z = {z}")]
    Precision { z: C64, terms: usize },
    #[error("sn evaluated at a pole near z = {0}")]
    Pole(C64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge: estimate {estimate}, error {error:e}")]
    NonConvergence { estimate: C64, error: f64 },
    #[error("ray integral shows no decay after {panels} panels")]
    Divergence { panels: usize },
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {flo}, f(hi) = {fhi}")]
    Bracket { lo: f64, hi: f64, flo: f64, fhi: f64 },
    #[error("phase jump too large between samples {0} and {1}")]
    Resolution(usize, usize),
    #[error("integrand not finite at {0}")]
    NotFinite(C64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatterError {
    #[error("k = {0} is an excluded branch point")]
    ExcludedPoint(C64),
    #[error("k = {k} outside the analyticity strip |Im λ| < {eps}")]
    OutsideStrip { k: C64, eps: f64 },
    #[error("ODE stepper failed at x = {0}")]
    Stepper(f64),
    #[error("ā vanishes at k = {0}: spectral singularity")]
    SpectralSingularity(C64),
    #[error("invalid datum: {0}")]
    InvalidDatum(String),
    #[error(transparent)]
    Branch(#[from] BranchError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionError {
    #[error("ξ = {xi} is outside the {expected} region (|ξ| boundary {boundary})")]
    WrongRegion { xi: f64, expected: &'static str, boundary: f64 },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("ln r undefined: |r| = {modulus:e} at k = {k}")]
    Reflectionless { k: C64, modulus: f64 },
    #[error("{what} has imaginary residue {residue:e}")]
    NotReal { what: &'static str, residue: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("configuration rejected: {0}")]
    Config(String),
    #[error("time step {dt} exceeds stability bound {bound}")]
    TimeStep { dt: f64, bound: f64 },
    #[error("domain too small: edge deviation {deviation:e} at t = {time}, front speed {front_speed}")]
    DomainTooSmall { time: f64, deviation: f64, front_speed: f64 },
    #[error("empty comparison mask")]
    EmptyMask,
}

/// Umbrella error for callers that cross module boundaries.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Branch(#[from] BranchError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Scatter(#[from] ScatterError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type Result<T> = std::result::Result<T, Error>;
