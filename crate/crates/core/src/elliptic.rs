//! Jacobi theta functions with real nome, complete elliptic integrals of the
//! first kind and the elliptic sine.
//!
//! Moduli follow the convention `K(m) = ∫₀^{π/2} (1 - m² sin² s)^{-1/2} ds`,
//! so `m` is the modulus itself rather than the parameter `m²`.

use crate::error::EllipticError;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const HARD_CAP: usize = 200;
const SERIES_EPS: f64 = 1e-17;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct EllipticModulus(f64);

impl EllipticModulus {
    pub fn new(m: f64) -> Result<Self, EllipticError> {
        if !(0.0..1.0).contains(&m) {
            return Err(EllipticError::Domain(m));
        }
        Ok(EllipticModulus(m))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `m' = √(1 - m²)`.
    pub fn complementary(self) -> f64 {
        ((1.0 - self.0) * (1.0 + self.0)).sqrt()
    }
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind by the arithmetic-geometric mean.
pub fn complete_k(m: EllipticModulus) -> f64 {
    PI / (2.0 * agm(1.0, m.complementary()))
}

/// `K` evaluated at the complementary modulus without forming `√(1 - m'^2)`,
/// which would lose digits when `m` is small.
fn complete_k_complementary(m: EllipticModulus) -> f64 {
    PI / (2.0 * agm(1.0, m.value()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaContext {
    tau: C64,
    rho: f64,
    terms: usize,
}

impl ThetaContext {
    /// Context for the nome `ϱ = exp(-π K(m')/K(m))`.
    pub fn from_modulus(m: EllipticModulus) -> Result<Self, EllipticError> {
        if m.value() == 0.0 {
            return Err(EllipticError::DegenerateNome(0.0));
        }
        let ratio = complete_k_complementary(m) / complete_k(m);
        Self::from_tau(C64::new(0.0, ratio))
    }

    /// Context for a purely imaginary period `τ` with positive imaginary part.
    pub fn from_tau(tau: C64) -> Result<Self, EllipticError> {
        if !(tau.im > 0.0) || tau.re != 0.0 || !tau.im.is_finite() {
            return Err(EllipticError::DegenerateNome(tau.im));
        }
        let rho = (-PI * tau.im).exp();
        // enough terms for arguments within one period strip |Im z| ≤ π Im τ
        let a = PI * tau.im;
        let budget = -SERIES_EPS.ln();
        let mut n = 1usize;
        while n < HARD_CAP && a * ((n * n) as f64 - 2.0 * n as f64) < budget {
            n += 1;
        }
        Ok(ThetaContext { tau, rho, terms: n + 2 })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn truncation_terms(&self) -> usize {
        self.terms
    }

    /// Modulus recovered from the nome, `m = θ₂²(0)/θ₃²(0)`.
    pub fn modulus(&self) -> f64 {
        let t2 = theta_j(2, C64::new(0.0, 0.0), self).unwrap_or_default();
        let t3 = theta_j(3, C64::new(0.0, 0.0), self).unwrap_or_default();
        (t2 * t2 / (t3 * t3)).re
    }
}

/// Term `n` of the symmetric series (without the leading factor 2) and its
/// `z`-derivative.
fn term(j: u8, n: usize, z: C64, rho: f64) -> (C64, C64) {
    let nf = n as f64;
    let sgn = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    match j {
        1 => {
            let w = 2.0 * nf + 1.0;
            let c = sgn * rho.powf((nf + 0.5) * (nf + 0.5));
            (c * (w * z).sin(), c * w * (w * z).cos())
        }
        2 => {
            let w = 2.0 * nf + 1.0;
            let c = rho.powf((nf + 0.5) * (nf + 0.5));
            (c * (w * z).cos(), -c * w * (w * z).sin())
        }
        3 | 4 => {
            let w = 2.0 * nf;
            let s = if j == 4 { sgn } else { 1.0 };
            let c = s * rho.powf(nf * nf);
            (c * (w * z).cos(), -c * w * (w * z).sin())
        }
        _ => unreachable!("theta index checked by caller"),
    }
}

/// Size of term `n` for real arguments, grown by `exp(w|Im z|)` off the axis.
fn envelope(j: u8, n: usize, z: C64, rho: f64) -> f64 {
    let nf = n as f64;
    let (w, e) = if j <= 2 { (2.0 * nf + 1.0, (nf + 0.5) * (nf + 0.5)) } else { (2.0 * nf, nf * nf) };
    2.0 * rho.powf(e) * (w * z.im.abs()).exp()
}

fn series(j: u8, z: C64, ctx: &ThetaContext, derivative: bool) -> Result<C64, EllipticError> {
    assert!((1..=4).contains(&j), "theta index must be 1..=4");
    let start = if j >= 3 { 1 } else { 0 };
    let mut sum = if j >= 3 && !derivative { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    let mut mag = sum.norm();
    for n in start..ctx.terms {
        let (v, dv) = term(j, n, z, ctx.rho);
        let t = 2.0 * if derivative { dv } else { v };
        sum += t;
        mag += envelope(j, n, z, ctx.rho);
        let bound = 2.0 * ctx.rho.powf(n as f64 * n as f64) * (2.0 * (n as f64 + 1.0) * z.im.abs()).exp();
        if n > start && (bound <= SERIES_EPS * mag || bound == 0.0) {
            return Ok(sum);
        }
    }
    Err(EllipticError::Precision { z, terms: ctx.terms })
}

/// `θ_j(z, ϱ)` for `j ∈ {1, 2, 3, 4}`.
pub fn theta_j(j: u8, z: C64, ctx: &ThetaContext) -> Result<C64, EllipticError> {
    series(j, z, ctx, false)
}

/// `z`-derivative of `θ_j`, summed term by term.
pub fn theta_j_prime(j: u8, z: C64, ctx: &ThetaContext) -> Result<C64, EllipticError> {
    series(j, z, ctx, true)
}

/// `Θ(k) = θ₃(πk)`, periodic with period 1 and quasi-periodic with period `τ`.
pub fn theta_cap(k: C64, ctx: &ThetaContext) -> Result<C64, EllipticError> {
    theta_j(3, PI * k, ctx)
}

/// Jacobi elliptic sine through the theta quotient.
pub fn sn(z: C64, m: EllipticModulus) -> Result<C64, EllipticError> {
    if m.value() == 0.0 {
        return Ok(z.sin());
    }
    let ctx = ThetaContext::from_modulus(m)?;
    sn_with(z, &ctx)
}

/// `sn` reusing a precomputed context.
pub fn sn_with(z: C64, ctx: &ThetaContext) -> Result<C64, EllipticError> {
    let zero = C64::new(0.0, 0.0);
    let t2 = theta_j(2, zero, ctx)?;
    let t3 = theta_j(3, zero, ctx)?;
    let u = z / (t3 * t3);
    let den = theta_j(4, u, ctx)?;
    if den.norm() < 1e-14 {
        return Err(EllipticError::Pole(z));
    }
    Ok(t3 / t2 * theta_j(1, u, ctx)? / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_at_zero_and_self_complementary_point() {
        let k0 = complete_k(EllipticModulus::new(0.0).unwrap());
        assert!((k0 - PI / 2.0).abs() < 1e-15);
        let m = EllipticModulus::new(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        assert!((complete_k(m) - complete_k_complementary(m)).abs() < 1e-14);
    }

    #[test]
    fn modulus_domain() {
        assert!(EllipticModulus::new(1.0).is_err());
        assert!(EllipticModulus::new(-0.1).is_err());
    }

    #[test]
    fn theta_trivial_values() {
        let ctx = ThetaContext::from_tau(C64::new(0.0, 1.0)).unwrap();
        assert_eq!(theta_j(1, C64::new(0.0, 0.0), &ctx).unwrap(), C64::new(0.0, 0.0));
        let tiny = ThetaContext::from_tau(C64::new(0.0, 30.0)).unwrap();
        assert!((theta_j(3, C64::new(0.0, 0.0), &tiny).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn sn_limits() {
        let m0 = EllipticModulus::new(0.0).unwrap();
        assert!((sn(C64::new(0.7, 0.0), m0).unwrap() - 0.7f64.sin()).norm() < 1e-15);
        let m = EllipticModulus::new(0.6).unwrap();
        assert!(sn(C64::new(0.0, 0.0), m).unwrap().norm() < 1e-16);
    }
}
