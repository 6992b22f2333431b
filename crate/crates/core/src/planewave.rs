//! Plane-wave regions `|ξ| > 4√2 q0`: stationary points, the scalar
//! function `δ`, the phase constant `g∞` and the leading-order solution.

use crate::branchfn::{self, Background, LimitSide};
use crate::error::{RegionError, Result};
use crate::quad::{self, PathSegment, QuadratureSpec, Singularity};
use crate::scattering::{InitialDatum, ReflectionData};
use num_complex::Complex64 as C64;
use std::cell::RefCell;
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

/// Largest accepted imaginary residue of `g∞`.
pub const REALNESS_TOL: f64 = 1e-9;

/// `4√2 q0`, the boundary between the plane-wave and elliptic regions.
pub fn region_boundary(bg: &Background) -> f64 {
    4.0 * std::f64::consts::SQRT_2 * bg.q0()
}

/// Which plane-wave region a similarity value belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlaneWaveSide {
    /// `ξ < -4√2 q0`.
    Left,
    /// `ξ > 4√2 q0`.
    Right,
}

/// Side of a real half-line cut, oriented left to right.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CutSide {
    /// Limit from the upper half-plane.
    #[default]
    Plus,
    Minus,
}

/// Real roots `k1 ≤ k2` of `k² - (ξ/4)k + q0²/2`.
pub fn stationary_points(xi: f64, bg: &Background) -> std::result::Result<(f64, f64), RegionError> {
    let q0 = bg.q0();
    let bound = region_boundary(bg);
    let disc = xi * xi - 32.0 * q0 * q0;
    let snap = 1e-12 * bound * bound;
    if xi.abs() < bound && disc < -snap {
        return Err(RegionError::WrongRegion { xi, expected: "plane-wave", boundary: bound });
    }
    let s = if disc <= snap { 0.0 } else { disc.sqrt() };
    Ok(((xi - s) / 8.0, (xi + s) / 8.0))
}

/// Number of far-field moments kept for the Cauchy integral.
const MOMENTS: usize = 48;

/// Moments `∫_{-∞}^{-R} f(ν) ν^{-n-1} dν` of the density `f = ln(1 + |r|²)`.
///
/// The density is integrated over dyadic panels out to `R·2^J`, where `J`
/// is smaller for ODE-based data because each evaluation costs `O(|ν|)`.
/// Beyond that `f` is replaced by `c/ν²`, with `c` fitted on the last panel.
fn far_moments(r: &ReflectionData, far: f64, spec: &QuadratureSpec) -> Result<Vec<C64>> {
    let panels = if matches!(r, ReflectionData::Ode(_)) { 4 } else { 12 };
    let failure: RefCell<Option<crate::Error>> = RefCell::new(None);
    let density = |nu: f64| match r.log_one_plus(nu) {
        Ok(f) => f,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e.into());
            f64::NAN
        }
    };
    let lift = |e: crate::error::QuadError| -> crate::Error { failure.borrow_mut().take().unwrap_or_else(|| e.into()) };
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    let mut total = 0.0f64;
    let mut last = (0.0, 0.0, 0.0);
    for j in 0..panels {
        let hi = -far * 2f64.powi(j);
        let lo = 2.0 * hi;
        let local = QuadratureSpec { abs_tol: spec.abs_tol.max(spec.rel_tol * total.abs()), ..*spec };
        let rule = quad::adapted_rule(|nu| C64::new(density(nu) / nu, 0.0), lo, hi, &local, 1 << 18).map_err(lift)?;
        let mut mass = 0.0;
        for &(nu, w) in &rule {
            let f = density(nu);
            if let Some(e) = failure.borrow_mut().take() {
                return Err(e);
            }
            mass += w * f;
            total += w * f / nu;
            nodes.push((nu, w * f));
        }
        last = (lo, hi, mass);
    }
    // ∫_lo^hi ν^{-2} dν = 1/|hi| - 1/|lo| on the negative axis
    let (lo, hi, mass) = last;
    let c = mass / (1.0 / hi.abs() - 1.0 / lo.abs());
    let edge = lo;
    Ok((0..MOMENTS)
        .map(|n| {
            let p = -(n as i32) - 1;
            let body: f64 = nodes.iter().map(|&(nu, wf)| wf * nu.powi(p)).sum();
            // ∫_{-∞}^{edge} c ν^{p-2} dν = c edge^{p-1}/(p-1)
            let tail = c * edge.powi(p - 1) / (p - 1) as f64;
            C64::new(body + tail, 0.0)
        })
        .collect())
}

/// `ln δ` and `δ` for the cut `(-∞, endpoint]`:
/// `ln δ(k) = (2πi)^{-1} ∫_{-∞}^{endpoint} ln(1 + r r̄)(ν)/(ν - k) dν`.
///
/// The part of the cut left of `-R` enters through the moments
/// `∫_{-∞}^{-R} f(ν) ν^{-n-1} dν`, computed once, so each evaluation with
/// `|k| ≤ R/4` only integrates over `[-R, endpoint]`.
#[derive(Clone, Debug)]
pub struct DeltaFunction<'a> {
    r: &'a ReflectionData,
    endpoint: f64,
    spec: QuadratureSpec,
    window: f64,
    far: f64,
    moments: Vec<C64>,
}

impl<'a> DeltaFunction<'a> {
    pub fn new(r: &'a ReflectionData, endpoint: f64, spec: QuadratureSpec) -> Result<Self> {
        let far = (4.0 * endpoint.abs() + 32.0).max(32.0);
        let trivial = matches!(r, ReflectionData::Constant(c) if c.norm() == 0.0);
        let moments = if trivial { Vec::new() } else { far_moments(r, far, &spec)? };
        Ok(DeltaFunction { r, endpoint, spec, window: 0.5, far, moments })
    }

    pub fn endpoint(&self) -> f64 {
        self.endpoint
    }

    fn density(&self, nu: f64) -> Result<f64> {
        Ok(self.r.log_one_plus(nu)?)
    }

    /// `∫_{-∞}^{-R} f(ν)/(ν - k) dν = Σ k^n M_n`.
    fn far_field(&self, k: C64) -> C64 {
        let mut pow = C64::new(1.0, 0.0);
        let mut sum = C64::new(0.0, 0.0);
        for m in &self.moments {
            sum += pow * m;
            pow *= k;
        }
        sum
    }

    /// `ln δ(k)`; `side` only matters for `k` on the cut.
    pub fn ln_delta(&self, k: C64, side: CutSide) -> Result<C64> {
        if let ReflectionData::Constant(c) = self.r {
            if c.norm() == 0.0 {
                return Ok(C64::new(0.0, 0.0));
            }
        }
        let e = self.endpoint;
        let scale = k.norm().max(1.0);
        if k == C64::new(e, 0.0) {
            return Err(crate::error::BranchError::Singular(k).into());
        }
        let nc = k.re.min(e);
        let (a, b) = (nc - self.window, (nc + self.window).min(e));
        let fc = self.density(nc)?;
        let spec = &self.spec;
        let failure: RefCell<Option<crate::Error>> = RefCell::new(None);
        let g = |nu: f64, subtract: bool| -> C64 {
            match self.density(nu) {
                Ok(f) => {
                    let num = if subtract { f - fc } else { f };
                    if num == 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        num / (C64::new(nu, 0.0) - k)
                    }
                }
                Err(e2) => {
                    failure.borrow_mut().get_or_insert(e2);
                    C64::new(f64::NAN, 0.0)
                }
            }
        };
        let lift = |e2: crate::error::QuadError| failure.borrow_mut().take().unwrap_or_else(|| e2.into());
        let mut total = if k.norm() <= 0.25 * self.far && a > -self.far {
            let near = PathSegment::new(C64::new(-self.far, 0.0), C64::new(a, 0.0));
            let (v, _) = quad::integrate_segment(|z| g(z.re, false), &near, spec).map_err(lift)?;
            v + self.far_field(k)
        } else {
            // (-∞, a]: integrate_ray runs from a towards -∞, hence the sign
            let (tail, _) = quad::integrate_ray(|z| g(z.re, false), C64::new(a, 0.0), C64::new(-1.0, 0.0), spec).map_err(lift)?;
            -tail
        };
        // split at the subtraction point so no node lands on it; when k sits
        // very close to that point the integrand varies on the scale |k - nc|
        // and geometric panels towards nc resolve it
        let sharp = if (k - nc).norm() < 1e-3 * self.window { Singularity::Logarithmic } else { Singularity::None };
        for (lo, hi, s0, s1) in [(a, nc, Singularity::None, sharp), (nc, b, sharp, Singularity::None)] {
            if hi > lo {
                let win = PathSegment::new(C64::new(lo, 0.0), C64::new(hi, 0.0)).with_singularities(s0, s1);
                let (v, _) = quad::integrate_segment(|z| g(z.re, true), &win, spec).map_err(lift)?;
                total += v;
            }
        }
        if b < e {
            let rest = PathSegment::new(C64::new(b, 0.0), C64::new(e, 0.0));
            let (v, _) = quad::integrate_segment(|z| g(z.re, false), &rest, spec).map_err(lift)?;
            total += v;
        }
        if let Some(e2) = failure.into_inner() {
            return Err(e2);
        }
        // ∫_a^b dν/(ν - k), continued to the requested side on the cut
        let on_cut = k.im.abs() <= 1e-14 * scale && k.re < e;
        let mut logs = (C64::new(b, 0.0) - k).ln() - (C64::new(a, 0.0) - k).ln();
        if on_cut {
            let lb = (b - k.re).abs().ln();
            let la = (a - k.re).abs().ln();
            let jump = match side {
                CutSide::Plus => I * PI,
                CutSide::Minus => -I * PI,
            };
            logs = C64::new(lb - la, 0.0) + if k.re > a && k.re < b { jump } else { C64::new(0.0, 0.0) };
        }
        total += fc * logs;
        Ok(total / (2.0 * PI * I))
    }

    pub fn delta(&self, k: C64, side: CutSide) -> Result<C64> {
        Ok(self.ln_delta(k, side)?.exp())
    }
}

/// Constants of the plane-wave asymptotics at one similarity value.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneWaveParams {
    pub xi: f64,
    pub k1: f64,
    pub k2: f64,
    pub g_inf: f64,
    /// Imaginary part discarded from `g∞`.
    pub g_inf_residue: f64,
    pub side: PlaneWaveSide,
}

impl PlaneWaveParams {
    /// Constants for `ξ` given the reflection coefficient of the problem
    /// posed on the side in question: the datum itself for `ξ < 0`, the
    /// mirrored datum `q(-x)` for `ξ > 0`.
    pub fn from_reflection(xi: f64, bg: &Background, r: &ReflectionData, spec: &QuadratureSpec) -> Result<Self> {
        let (k1, k2) = stationary_points(xi, bg)?;
        let side = if xi < 0.0 { PlaneWaveSide::Left } else { PlaneWaveSide::Right };
        let (endpoint, side_bg) = match side {
            PlaneWaveSide::Left => (k1, *bg),
            PlaneWaveSide::Right => (stationary_points(-xi, bg)?.0, bg.mirrored()),
        };
        let g = g_inf_pw(r, endpoint, &side_bg, spec)?;
        Ok(PlaneWaveParams { xi, k1, k2, g_inf: g.re, g_inf_residue: g.im.abs(), side })
    }

    /// Constants for `ξ` with the reflection coefficient derived from `datum`.
    pub fn for_datum(xi: f64, datum: &InitialDatum, spec: &QuadratureSpec) -> Result<Self> {
        let bg = datum.background();
        let r = if xi < 0.0 {
            ReflectionData::for_datum(datum)
        } else {
            ReflectionData::for_datum(&datum.mirrored())
        };
        PlaneWaveParams::from_reflection(xi, &bg, &r, spec)
    }
}

/// `g∞ = -(1/π) ∫_B ln δ(ζ)/λ(ζ) dζ` with `B` oriented upwards and the
/// right-hand limit of `λ`. The returned value keeps its imaginary part;
/// an error is raised when it exceeds `REALNESS_TOL`.
pub fn g_inf_pw(r: &ReflectionData, k1: f64, bg: &Background, spec: &QuadratureSpec) -> Result<C64> {
    let q0 = bg.q0();
    let delta = DeltaFunction::new(r, k1, *spec)?;
    let seg = PathSegment::new(C64::new(0.0, -q0), C64::new(0.0, q0)).with_singularities(Singularity::InvSqrt, Singularity::InvSqrt);
    let failure: RefCell<Option<crate::Error>> = RefCell::new(None);
    let (v, _) = quad::integrate_segment(
        |z| match delta.ln_delta(z, CutSide::Plus) {
            Ok(l) => l / branchfn::lambda(z, bg, LimitSide::Right),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                C64::new(f64::NAN, 0.0)
            }
        },
        &seg,
        spec,
    )
    .map_err(|e| failure.borrow_mut().take().unwrap_or_else(|| e.into()))?;
    let g = -v / PI;
    if g.im.abs() > REALNESS_TOL {
        return Err(RegionError::NotReal { what: "plane-wave g_inf", residue: g.im.abs() }.into());
    }
    Ok(g)
}

/// Leading-order solution `e^{2ig∞} q∓` at `(x, t)`.
pub fn q_asymp_pw(x: f64, t: f64, params: &PlaneWaveParams, bg: &Background) -> Result<C64> {
    let xi = x / t;
    if !(t > 0.0) || (xi - params.xi).abs() > 1e-8 * params.xi.abs().max(1.0) {
        return Err(RegionError::WrongRegion { xi, expected: "stored plane-wave ξ", boundary: params.xi }.into());
    }
    let q = match params.side {
        PlaneWaveSide::Left => bg.q_minus(),
        PlaneWaveSide::Right => bg.q_plus(),
    };
    Ok((2.0 * I * params.g_inf).exp() * q)
}

/// `Re(iθ(ξ, k))` for sign-structure diagnostics.
pub fn re_i_theta(xi: f64, k: C64, bg: &Background) -> f64 {
    (I * branchfn::theta_phase(xi, k, bg, LimitSide::Right)).re
}
