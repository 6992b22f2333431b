//! Long-time asymptotics of the focusing nonlinear Schrödinger equation on a
//! nonzero background: spectral functions, scattering data, the plane-wave
//! and modulated elliptic-wave leading-order profiles, and a split-step
//! integrator to compare them against.

pub mod branchfn;
pub mod elliptic;
pub mod ellipticwave;
pub mod error;
pub mod mat2;
pub mod nlsim;
pub mod quad;
pub mod planewave;
pub mod scattering;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
