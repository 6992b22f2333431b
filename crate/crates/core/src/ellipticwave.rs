//! Modulated elliptic wave region `|ξ| < 4√2 q0`: the genus-one geometry
//! `(k0, α, m, τ, C)`, the frequencies `Ω` and `ω`, the Abel map, the phase
//! constants `H0`, `G∞`, `g∞`, and the theta-quotient and `sn` forms of the
//! leading-order solution.
//!
//! Throughout, `γ(k) = [(k² + q0²)(k - α)(k - ᾱ)]^{1/2}` with `γ ~ k²` at
//! infinity, cut along `B` and the polyline `ᾱ → k0 → α`, and right limits
//! taken with respect to the upward orientation of both cuts.
//!
//! Right-half quantities (`0 < ξ < 4√2 q0`) are computed from the mirrored
//! datum `q(-x)` at `-ξ`.

use crate::branchfn::{self, Background, BranchPoints, LimitSide};
use crate::elliptic::{self, EllipticModulus, ThetaContext};
use crate::error::{QuadError, RegionError, Result};
use crate::planewave::{region_boundary, CutSide, DeltaFunction};
use crate::quad::{self, PathSegment, QuadratureSpec, Singularity};
use crate::scattering::{InitialDatum, ReflectionData};
use num_complex::Complex64 as C64;
use std::cell::RefCell;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const I: C64 = C64::new(0.0, 1.0);

/// Imaginary residue above which `ω`, `g∞` or `H0` are rejected.
pub const REALNESS_ABORT: f64 = 1e-6;

/// Moduli at or above this value are treated as the collapse `ξ → 0`.
pub const DEGENERATE_MODULUS: f64 = 1.0 - 1e-9;

/// `|r|` below this anywhere on `L7 ∪ L8` makes `ln r` meaningless.
pub const REFLECTIONLESS_FLOOR: f64 = 1e-12;

/// Samples per segment used to track branches along a contour.
const TRACK_SAMPLES: usize = 256;

/// Which half of the elliptic region a similarity value belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EllipticSide {
    /// `-4√2 q0 < ξ < 0`.
    Left,
    /// `0 < ξ < 4√2 q0`, handled through the mirrored datum.
    Right,
}

fn guarded<F>(mut f: F, seg: &PathSegment, spec: &QuadratureSpec) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let failure: RefCell<Option<crate::Error>> = RefCell::new(None);
    let out = quad::integrate_segment(
        |z| match f(z) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                C64::new(f64::NAN, 0.0)
            }
        },
        seg,
        spec,
    );
    match out {
        Ok((v, _)) => Ok(v),
        Err(e) => Err(failure.borrow_mut().take().unwrap_or_else(|| e.into())),
    }
}

fn guarded_ray<F>(mut f: F, origin: C64, dir: C64, sing: Singularity, spec: &QuadratureSpec) -> Result<C64>
where
    F: FnMut(C64) -> Result<C64>,
{
    let failure: RefCell<Option<crate::Error>> = RefCell::new(None);
    let out = quad::integrate_ray_from(
        |z| match f(z) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                C64::new(f64::NAN, 0.0)
            }
        },
        origin,
        dir,
        sing,
        spec,
    );
    match out {
        Ok((v, _)) => Ok(v),
        Err(e) => Err(failure.borrow_mut().take().unwrap_or_else(|| e.into())),
    }
}

fn wrong_region(xi: f64, bg: &Background) -> crate::Error {
    RegionError::WrongRegion { xi, expected: "elliptic", boundary: region_boundary(bg) }.into()
}

/// Scaled condition for `k0`: with `x = -ξ/(8q0)` and `k0 = q0(y - 2x)`,
/// `F(y) = 2∫_0^{π/2} Re[√((i sin φ + y)² + c)(i sin φ + 2x - y)] dφ`,
/// `c = 2y(y - 2x) + 1`.
pub fn k0_condition(y: f64, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    let c = 2.0 * y * (y - 2.0 * x) + 1.0;
    let (v, _) = quad::adapt_real(
        |phi| {
            let s = I * phi.sin();
            let w = ((s + y) * (s + y) + c).sqrt() * (s + 2.0 * x - y);
            C64::new(w.re, 0.0)
        },
        0.0,
        PI / 2.0,
        spec,
    )?;
    Ok(2.0 * v.re)
}

/// Real vertex `k0(ξ)` of the elliptic cut for `-4√2 q0 ≤ ξ ≤ 0`.
///
/// The root is bracketed by `y ∈ [0, 2x]`, i.e. `k0 ∈ [ξ/4, 0]`; it lies
/// below `ξ/8` throughout the open region and reaches it at the boundary.
pub fn solve_k0(xi: f64, bg: &Background) -> Result<f64> {
    let q0 = bg.q0();
    let bound = region_boundary(bg);
    if xi > 0.0 || xi < -bound * (1.0 + 1e-14) || !xi.is_finite() {
        return Err(wrong_region(xi, bg));
    }
    if xi == 0.0 {
        return Ok(0.0);
    }
    if (xi + bound).abs() <= 1e-14 * bound {
        return Ok(-q0 * FRAC_1_SQRT_2);
    }
    let x = -xi / (8.0 * q0);
    let spec = QuadratureSpec { rel_tol: 1e-13, abs_tol: 1e-15, ..QuadratureSpec::default() };
    let failure: RefCell<Option<crate::Error>> = RefCell::new(None);
    let f = |y: f64| match k0_condition(y, x, &spec) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let y = quad::brent_root(f, 0.0, 2.0 * x, 1e-15 * x.max(1e-300));
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let y = y?;
    let residual = k0_condition(y, x, &spec)?;
    if residual.abs() > 1e-10 {
        return Err(QuadError::NonConvergence { estimate: C64::new(residual, 0.0), error: residual.abs() }.into());
    }
    Ok(q0 * (y - 2.0 * x))
}

/// `α = (-k0 + ξ/4) + i√(2k0² - (ξ/2)k0 + q0²)`.
pub fn alpha_from_k0(xi: f64, k0: f64, q0: f64) -> C64 {
    let im2 = 2.0 * k0 * k0 - 0.5 * xi * k0 + q0 * q0;
    C64::new(-k0 + 0.25 * xi, im2.max(0.0).sqrt())
}

/// `h(α) = -2(∫_{iq0}^{α} + ∫_{-iq0}^{α}) (z - k0)(z - α)(z - ᾱ)/γ(z) dz`
/// for `α` derived from a trial `k0`. The second path runs through
/// `α_re/2` on the real axis, between the two cuts.
pub fn h_at_alpha(xi: f64, k0: f64, bg: &Background, spec: &QuadratureSpec) -> Result<C64> {
    let q0 = bg.q0();
    let alpha = alpha_from_k0(xi, k0, q0);
    if alpha.im == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let bp = BranchPoints::new(alpha, k0)?;
    let sym = Background::symmetric(q0)?;
    let f = |z: C64| -> Result<C64> {
        let p = (z - k0) * (z - alpha) * (z - alpha.conj());
        Ok(p / branchfn::gamma(z, &sym, &bp, LimitSide::Right))
    };
    let mid = C64::new(0.5 * alpha.re, 0.0);
    let s1 = PathSegment::new(I * q0, alpha).with_singularities(Singularity::InvSqrt, Singularity::InvSqrt);
    let s2 = PathSegment::new(-I * q0, mid).with_singularities(Singularity::InvSqrt, Singularity::None);
    let s3 = PathSegment::new(mid, alpha).with_singularities(Singularity::None, Singularity::InvSqrt);
    let total = guarded(f, &s1, spec)? + guarded(f, &s2, spec)? + guarded(f, &s3, spec)?;
    Ok(-2.0 * total)
}

/// Genus-one data that depends on `ξ` and `q0` only.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticGeometry {
    pub xi: f64,
    pub q0: f64,
    pub k0: f64,
    pub alpha: C64,
    pub m: EllipticModulus,
    pub k_val: f64,
    /// `iK(m')/K(m)`; infinite imaginary part when `m = 0`.
    pub tau: C64,
    /// `C = 1/∮_β dk/γ` in closed form.
    pub c_norm: C64,
    pub omega_big: f64,
    pub k_star: f64,
    theta: Option<ThetaContext>,
    bp: BranchPoints,
    sym: Background,
}

impl EllipticGeometry {
    /// Geometry at `-4√2 q0 ≤ ξ < 0`; the collapse at `ξ = 0` is rejected.
    pub fn new(xi: f64, bg: &Background) -> Result<Self> {
        let q0 = bg.q0();
        let k0 = solve_k0(xi, bg)?;
        let alpha = alpha_from_k0(xi, k0, q0);
        let shifted = (alpha + I * q0).norm();
        let m_raw = 2.0 * (q0 * alpha.im).sqrt() / shifted;
        if m_raw >= DEGENERATE_MODULUS {
            return Err(RegionError::Degenerate(format!("elliptic modulus {m_raw} at ξ = {xi}: branch points collapse onto ±iq0")).into());
        }
        let m = EllipticModulus::new(m_raw)?;
        let k_val = elliptic::complete_k(m);
        let theta = if m_raw > 0.0 { Some(ThetaContext::from_modulus(m)?) } else { None };
        let tau = theta.map_or(C64::new(0.0, f64::INFINITY), |t| t.tau());
        let c_norm = -I * shifted / (4.0 * k_val);
        let omega_big = PI * shifted / k_val * (xi - 2.0 * alpha.re);
        let k_star = q0 * alpha.re / (q0 + alpha.im);
        let bp = BranchPoints::new(alpha, k0)?;
        Ok(EllipticGeometry { xi, q0, k0, alpha, m, k_val, tau, c_norm, omega_big, k_star, theta, bp, sym: Background::symmetric(q0)? })
    }

    pub fn theta_context(&self) -> Option<&ThetaContext> {
        self.theta.as_ref()
    }

    pub fn branch_points(&self) -> &BranchPoints {
        &self.bp
    }

    /// `γ(k)`, right-continuous on both cuts.
    pub fn gamma(&self, k: C64) -> C64 {
        branchfn::gamma(k, &self.sym, &self.bp, LimitSide::Right)
    }

    /// `(k - k0)(k - α)(k - ᾱ)`.
    pub fn cubic(&self, k: C64) -> C64 {
        (k - self.k0) * (k - self.alpha) * (k - self.alpha.conj())
    }

    fn b_segment(&self) -> PathSegment {
        PathSegment::new(-I * self.q0, I * self.q0).with_singularities(Singularity::InvSqrt, Singularity::InvSqrt)
    }

    /// `C` from the `β`-cycle, `1/(2∫_{-iq0}^{iq0} dk/γ)` along the right
    /// edge of `B`.
    pub fn c_quadrature(&self, spec: &QuadratureSpec) -> Result<C64> {
        let v = guarded(|z| Ok(1.0 / self.gamma(z)), &self.b_segment(), spec)?;
        Ok(1.0 / (2.0 * v))
    }

    /// `τ = 2∫_{ᾱ}^{-iq0} dw` from the `α`-cycle with `C` by quadrature.
    pub fn tau_from_cycles(&self, spec: &QuadratureSpec) -> Result<C64> {
        let c = self.c_quadrature(spec)?;
        let seg = PathSegment::new(self.alpha.conj(), -I * self.q0).with_singularities(Singularity::InvSqrt, Singularity::InvSqrt);
        let v = guarded(|z| Ok(1.0 / self.gamma(z)), &seg, spec)?;
        Ok(2.0 * c * v)
    }

    /// `-4(∫_{iq0}^{α} + ∫_{-iq0}^{ᾱ}) (z - k0)(z - α)(z - ᾱ)/γ(z) dz`.
    ///
    /// With `γ ~ k²` this contour expression equals `-Ω`; the imaginary part
    /// is kept as a residue.
    pub fn omega_big_contour(&self, spec: &QuadratureSpec) -> Result<C64> {
        let f = |z: C64| Ok(self.cubic(z) / self.gamma(z));
        let s1 = PathSegment::new(I * self.q0, self.alpha).with_singularities(Singularity::InvSqrt, Singularity::InvSqrt);
        let s2 = PathSegment::new(-I * self.q0, self.alpha.conj()).with_singularities(Singularity::InvSqrt, Singularity::InvSqrt);
        Ok(-4.0 * (guarded(f, &s1, spec)? + guarded(f, &s2, spec)?))
    }

    /// `Im h(α)` at the stored `k0`.
    pub fn h_residual_at_alpha(&self, spec: &QuadratureSpec) -> Result<f64> {
        Ok(h_at_alpha(self.xi, self.k0, &self.sym, spec)?.im)
    }

    /// `v∞ = C∫_{iq0}^{i∞} dk/γ` along the imaginary axis.
    pub fn v_infinity(&self, spec: &QuadratureSpec) -> Result<C64> {
        let v = guarded_ray(|z| Ok(1.0 / self.gamma(z)), I * self.q0, I, Singularity::InvSqrt, spec)?;
        Ok(self.c_norm * v)
    }

    /// `H0` from horizontal rays `±iq0 + s`, `s ≥ 0`, of the regularised
    /// integrand `cubic/γ - (z - ξ/4)`, which decays like `z^{-2}`.
    /// Returned complex so the residue can be inspected.
    pub fn h0(&self, spec: &QuadratureSpec) -> Result<C64> {
        let f = |z: C64| Ok(self.h0_integrand(z));
        let up = guarded_ray(f, I * self.q0, C64::new(1.0, 0.0), Singularity::InvSqrt, spec)?;
        let down = guarded_ray(f, -I * self.q0, C64::new(1.0, 0.0), Singularity::InvSqrt, spec)?;
        Ok(-2.0 * (up + down) - 2.0 * self.q0 * self.q0)
    }

    /// `cubic/γ - (z - ξ/4)`. Far out, where the two terms agree to many
    /// digits, it is rewritten with `k0 + α_re = ξ/4` as
    /// `P(A1 - A2)/(1 + A2) + k0 α_re/z`, `P = (z - k0)(z - α_re)/z`,
    /// `A1 = √(1 + α_im²/(z - α_re)²) - 1`, `A2 = √(1 + q0²/z²) - 1`.
    pub fn h0_integrand(&self, z: C64) -> C64 {
        let reach = 4.0 * (self.alpha.norm() + self.q0 + self.k0.abs()) + 1.0;
        if z.norm() < reach {
            return self.cubic(z) / self.gamma(z) - (z - 0.25 * self.xi);
        }
        let are = self.alpha.re;
        let sqrt1m = |w: C64| w / ((1.0 + w).sqrt() + 1.0);
        let a1 = sqrt1m(self.alpha.im * self.alpha.im / ((z - are) * (z - are)));
        let a2 = sqrt1m(self.q0 * self.q0 / (z * z));
        let p = (z - self.k0) * (z - are) / z;
        p * (a1 - a2) / (1.0 + a2) + self.k0 * are / z
    }

    fn cuts(&self) -> Vec<(C64, C64)> {
        let mut cuts = vec![(-I * self.q0, I * self.q0)];
        if self.alpha.im > 0.0 {
            let v = C64::new(self.k0, 0.0);
            cuts.push((self.alpha.conj(), v));
            cuts.push((v, self.alpha));
        }
        cuts
    }

    fn is_branch_point(&self, k: C64) -> bool {
        let tol = 1e-12 * k.norm().max(1.0);
        [I * self.q0, -I * self.q0, self.alpha, self.alpha.conj()].iter().any(|b| (k - b).norm() <= tol)
    }

    /// Abel map `v(k) = C∫_{iq0}^{k} dk/γ` along the polyline through
    /// `points` (which must start at `iq0`). Paths that cross a cut in their
    /// interior are rejected.
    pub fn abel_map_along(&self, points: &[C64], spec: &QuadratureSpec) -> Result<C64> {
        if points.len() < 2 || (points[0] - I * self.q0).norm() > 1e-12 {
            return Err(RegionError::Degenerate("Abel-map path must start at iq0".into()).into());
        }
        for w in points.windows(2) {
            if let Some(&(a, b)) = self.cuts().iter().find(|&&(a, b)| crosses(w[0], w[1], a, b)) {
                return Err(RegionError::Degenerate(format!("path segment {} → {} crosses the cut {a} → {b}", w[0], w[1])).into());
            }
        }
        let n = points.len() - 1;
        let mut total = C64::new(0.0, 0.0);
        for (j, w) in points.windows(2).enumerate() {
            let s0 = if self.is_branch_point(w[0]) { Singularity::InvSqrt } else { Singularity::None };
            let s1 = if j + 1 == n && self.is_branch_point(w[1]) { Singularity::InvSqrt } else { Singularity::None };
            let seg = PathSegment::new(w[0], w[1]).with_singularities(s0, s1);
            total += guarded(|z| Ok(1.0 / self.gamma(z)), &seg, spec)?;
        }
        Ok(self.c_norm * total)
    }

    /// Abel map along the first cut-free path among: the straight segment,
    /// a detour through the right half-plane, and a detour over the top.
    pub fn abel_map(&self, k: C64, spec: &QuadratureSpec) -> Result<C64> {
        let start = I * self.q0;
        if k == start {
            return Ok(C64::new(0.0, 0.0));
        }
        let reach = 2.0 + 2.0 * k.norm() + 2.0 * self.q0;
        let candidates = [
            vec![start, k],
            vec![start, start + reach, k],
            vec![start, start + I * reach, C64::new(-reach, self.q0 + reach), k],
        ];
        for path in candidates {
            let clean = path.windows(2).all(|w| self.cuts().iter().all(|&(a, b)| !crosses(w[0], w[1], a, b)));
            if clean {
                return self.abel_map_along(&path, spec);
            }
        }
        Err(RegionError::Degenerate(format!("no cut-free path from iq0 to {k}")).into())
    }

    /// `c = v(k*) + (1 + τ)/2`.
    pub fn c_const(&self, spec: &QuadratureSpec) -> Result<C64> {
        Ok(self.abel_map(C64::new(self.k_star, 0.0), spec)? + 0.5 * (1.0 + self.tau))
    }

    /// Distance of `z` from the lattice `ℤ + τℤ`.
    pub fn lattice_distance(&self, z: C64) -> f64 {
        let mut w = z;
        if self.tau.im.is_finite() {
            w -= self.tau * (w.im / self.tau.im).round();
        }
        w.re -= w.re.round();
        w.norm()
    }
}

/// True if the open segment `p → q` meets the segment `a → b` other than at
/// the endpoints `p`, `q`.
fn crosses(p: C64, q: C64, a: C64, b: C64) -> bool {
    let d = q - p;
    let e = b - a;
    let den = d.re * e.im - d.im * e.re;
    let scale = d.norm() * e.norm();
    let f = a - p;
    if den.abs() <= 1e-14 * scale {
        // parallel: only collinear overlap counts
        let off = (f.re * d.im - f.im * d.re).abs();
        if off > 1e-12 * scale.max(1e-300) {
            return false;
        }
        let len2 = d.norm_sqr();
        let ta = (f * d.conj()).re / len2;
        let tb = ((b - p) * d.conj()).re / len2;
        let (lo, hi) = (ta.min(tb), ta.max(tb));
        return hi > 1e-12 && lo < 1.0 - 1e-12;
    }
    let s = (f.re * e.im - f.im * e.re) / den;
    let u = (f.re * d.im - f.im * d.re) / den;
    let eps = 1e-12;
    s > eps && s < 1.0 - eps && u >= -eps && u <= 1.0 + eps
}

/// Jump contours `L7` (from `k0` to `α`) and `L8` (from `k0` to `ᾱ`), given
/// as polylines; `B̃ = L7 ∪ (-L8)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpContours {
    pub l7: Vec<C64>,
    pub l8: Vec<C64>,
}

impl JumpContours {
    /// Straight segments along the cut.
    pub fn straight(geo: &EllipticGeometry) -> Self {
        let k0 = C64::new(geo.k0, 0.0);
        JumpContours { l7: vec![k0, geo.alpha], l8: vec![k0, geo.alpha.conj()] }
    }

    /// `L7` through `via`, `L8` its mirror image.
    pub fn through(geo: &EllipticGeometry, via: C64) -> Self {
        let k0 = C64::new(geo.k0, 0.0);
        JumpContours { l7: vec![k0, via, geo.alpha], l8: vec![k0, via.conj(), geo.alpha.conj()] }
    }
}

/// Branch bookkeeping along one polyline: `γ` continued from its right limit
/// at the first point, and a continuous `ln` of a reflection function.
struct TrackedPath {
    segments: Vec<PathSegment>,
    gammas: Vec<Vec<C64>>,
    logs: Vec<Vec<f64>>,
}

impl TrackedPath {
    fn new<F>(geo: &EllipticGeometry, points: &[C64], mut refl: F) -> Result<Self>
    where
        F: FnMut(C64) -> Result<C64>,
    {
        let segments: Vec<PathSegment> = points.windows(2).map(|w| PathSegment::new(w[0], w[1])).collect();
        let mut n = TRACK_SAMPLES;
        loop {
            let mut gammas = Vec::with_capacity(segments.len());
            let mut samples = Vec::new();
            let mut prev = geo.gamma(points[0]);
            for seg in &segments {
                let mut g = Vec::with_capacity(n + 1);
                for i in 0..=n {
                    let z = seg.point(i as f64 / n as f64);
                    let raw = geo.gamma(z);
                    let v = if (raw * prev.conj()).re >= 0.0 { raw } else { -raw };
                    if v.norm() > 0.0 {
                        prev = v;
                    }
                    g.push(v);
                    let r = refl(z)?;
                    if r.norm() < REFLECTIONLESS_FLOOR {
                        return Err(RegionError::Reflectionless { k: z, modulus: r.norm() }.into());
                    }
                    samples.push(r);
                }
                gammas.push(g);
            }
            match quad::unwrap_log(&samples) {
                Ok(all) => {
                    let logs = all.chunks(n + 1).map(|c| c.iter().map(|l| l.im).collect()).collect();
                    return Ok(TrackedPath { segments, gammas, logs });
                }
                Err(e) if n >= 1 << 14 => return Err(e.into()),
                Err(_) => n *= 4,
            }
        }
    }

    fn reference(table: &[C64], s: f64) -> C64 {
        let n = table.len() - 1;
        let x = s.clamp(0.0, 1.0) * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        table[i] * (1.0 - t) + table[i + 1] * t
    }

    fn gamma_at(&self, geo: &EllipticGeometry, j: usize, s: f64, z: C64) -> C64 {
        let raw = geo.gamma(z);
        let mut reference = Self::reference(&self.gammas[j], s);
        if reference.norm() == 0.0 {
            // at a zero of γ fall back on the neighbouring sample
            let n = self.gammas[j].len() - 1;
            reference = if s > 0.5 { self.gammas[j][n - 1] } else { self.gammas[j][1] };
        }
        if (raw * reference.conj()).re >= 0.0 {
            raw
        } else {
            -raw
        }
    }

    fn log_at(&self, j: usize, s: f64, value: C64) -> C64 {
        let phases = &self.logs[j];
        let n = phases.len() - 1;
        let x = s.clamp(0.0, 1.0) * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        let reference = phases[i] * (1.0 - t) + phases[i + 1] * t;
        let raw = value.arg();
        C64::new(value.norm().ln(), raw + 2.0 * PI * ((reference - raw) / (2.0 * PI)).round())
    }

    fn parameter(&self, j: usize, z: C64) -> f64 {
        let seg = &self.segments[j];
        let d = seg.end - seg.start;
        (((z - seg.start) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0)
    }
}

/// Contour integrals entering `ω` and `g∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourIntegrals {
    /// `∫_B ln δ² w/γ`.
    pub b: C64,
    /// `∫_{L7} (2 ln δ - ln r) w/γ`.
    pub l7: C64,
    /// `∫_{L8} (2 ln δ + ln r̄) w/γ`.
    pub l8: C64,
    /// `∫_{L7} w/γ`.
    pub j7: C64,
    /// `∫_{L8} w/γ`.
    pub j8: C64,
}

/// Reflection-dependent constants of the elliptic region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectionConstants {
    pub omega_small: f64,
    pub omega_residue: f64,
    pub g_inf: f64,
    pub g_inf_residue: f64,
    /// `g∞` with the `ω` term written as `-iω α_re ∫_{B̃} dν/γ`.
    pub g_inf_alpha_form: C64,
    pub plain: ContourIntegrals,
    pub weighted: ContourIntegrals,
}

fn contour_integrals<W>(
    geo: &EllipticGeometry,
    delta: &DeltaFunction<'_>,
    r: &ReflectionData,
    l7: &TrackedPath,
    l8: &TrackedPath,
    weight: W,
    spec: &QuadratureSpec,
) -> Result<ContourIntegrals>
where
    W: Fn(C64) -> C64,
{
    let b = guarded(|z| Ok(2.0 * delta.ln_delta(z, CutSide::Plus)? * weight(z) / geo.gamma(z)), &geo.b_segment(), spec)?;
    let leg = |path: &TrackedPath, lower: bool| -> Result<(C64, C64)> {
        let n = path.segments.len();
        let mut total = C64::new(0.0, 0.0);
        let mut plain = C64::new(0.0, 0.0);
        for j in 0..n {
            let s0 = if j == 0 { Singularity::Logarithmic } else { Singularity::None };
            let s1 = if j + 1 == n { Singularity::InvSqrt } else { Singularity::None };
            let seg = path.segments[j].with_singularities(s0, s1);
            total += guarded(
                |z| {
                    let s = path.parameter(j, z);
                    let g = path.gamma_at(geo, j, s, z);
                    let ln_d = delta.ln_delta(z, CutSide::Plus)?;
                    let lr = if lower {
                        path.log_at(j, s, r.r_bar(z, LimitSide::Right)?)
                    } else {
                        -path.log_at(j, s, r.r(z, LimitSide::Right)?)
                    };
                    Ok((2.0 * ln_d + lr) * weight(z) / g)
                },
                &seg,
                spec,
            )?;
            let seg = path.segments[j].with_singularities(Singularity::None, s1);
            plain += guarded(
                |z| {
                    let s = path.parameter(j, z);
                    Ok(weight(z) / path.gamma_at(geo, j, s, z))
                },
                &seg,
                spec,
            )?;
        }
        Ok((total, plain))
    };
    let (l7v, j7) = leg(l7, false)?;
    let (l8v, j8) = leg(l8, true)?;
    Ok(ContourIntegrals { b, l7: l7v, l8: l8v, j7, j8 })
}

/// `ω` and `g∞` for the reflection coefficient `r` of the problem on the
/// side in question.
///
/// `ω = i(I_B + I_7 - I_8)/∫_{B̃} dν/γ` and
/// `g∞ = -(1/2π)[I_B^ν + I_7^ν - I_8^ν + iω ∫_{B̃} ν dν/γ]`, where the
/// superscript marks an extra factor `ν`. The second form is the constant
/// term of the large-`k` expansion of `g`; the variant with
/// `α_re ∫_{B̃} dν/γ` in place of `∫_{B̃} ν dν/γ` is reported alongside.
pub fn reflection_constants(
    geo: &EllipticGeometry,
    r: &ReflectionData,
    contours: &JumpContours,
    spec: &QuadratureSpec,
) -> Result<ReflectionConstants> {
    if geo.alpha.im == 0.0 {
        return Err(RegionError::Degenerate("B̃ collapses at the region boundary".into()).into());
    }
    // the outer integrals cannot be tighter than the δ values they sample
    let delta = DeltaFunction::new(r, geo.k0, *spec)?;
    let spec = &spec.scaled(10.0);
    let l7 = TrackedPath::new(geo, &contours.l7, |z| Ok(r.r(z, LimitSide::Right)?))?;
    let l8 = TrackedPath::new(geo, &contours.l8, |z| Ok(r.r_bar(z, LimitSide::Right)?))?;
    let plain = contour_integrals(geo, &delta, r, &l7, &l8, |_| C64::new(1.0, 0.0), spec)?;
    let weighted = contour_integrals(geo, &delta, r, &l7, &l8, |z| z, spec)?;
    let btilde = plain.j7 - plain.j8;
    let omega = I * (plain.b + plain.l7 - plain.l8) / btilde;
    if omega.im.abs() > REALNESS_ABORT {
        return Err(RegionError::NotReal { what: "omega", residue: omega.im.abs() }.into());
    }
    let w = omega.re;
    let base = weighted.b + weighted.l7 - weighted.l8;
    let g = -(base + I * w * (weighted.j7 - weighted.j8)) / (2.0 * PI);
    let g_alpha = -(base + I * w * geo.alpha.re * btilde) / (2.0 * PI);
    if g.im.abs() > REALNESS_ABORT {
        return Err(RegionError::NotReal { what: "elliptic g_inf", residue: g.im.abs() }.into());
    }
    Ok(ReflectionConstants {
        omega_small: w,
        omega_residue: omega.im.abs(),
        g_inf: g.re,
        g_inf_residue: g.im.abs(),
        g_inf_alpha_form: g_alpha,
        plain,
        weighted,
    })
}

/// Envelope offset `X = -[ω + arg q₋]/(2π) - 1/4`.
///
/// The theta argument of the solution is `[Ω_h t - ω - arg q₋ - π/2]/(2π)`
/// with `Ω_h = h⁺ + h⁻ = 2h(α)` the jump of `h` across `L7 ∪ L8`. With
/// `h ~ -2k²` this jump is `-π|α + iq0|(ξ - 2α_re)/K`, so writing the
/// argument with the increasing phase `|α + iq0|(x - 2α_re t)/(2K)` flips
/// the sign of every other term.
pub fn x_offset(omega_small: f64, bg: &Background) -> f64 {
    -(omega_small + bg.q_minus().arg()) / (2.0 * PI) - 0.25
}

/// All constants of the leading-order solution at one `ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EllipticParams {
    pub geometry: EllipticGeometry,
    pub side: EllipticSide,
    /// Background of the problem actually solved (mirrored for `ξ > 0`).
    pub background: Background,
    pub omega_small: f64,
    pub omega_residue: f64,
    pub v_inf: C64,
    pub h0: f64,
    pub h0_residue: f64,
    pub g_inf_big: f64,
    pub g_inf: f64,
    pub g_inf_residue: f64,
    pub x_offset: f64,
    pub c_const: C64,
}

impl EllipticParams {
    /// Constants at `ξ` from a given reflection coefficient, which must
    /// belong to the datum for `ξ < 0` and to the mirrored datum for `ξ > 0`.
    pub fn from_reflection(xi: f64, bg: &Background, r: &ReflectionData, spec: &QuadratureSpec) -> Result<Self> {
        let (side, xi_eff, side_bg) = if xi < 0.0 {
            (EllipticSide::Left, xi, *bg)
        } else if xi > 0.0 {
            (EllipticSide::Right, -xi, bg.mirrored())
        } else {
            return Err(RegionError::Degenerate("ξ = 0: branch points collapse onto ±iq0".into()).into());
        };
        let geometry = EllipticGeometry::new(xi_eff, &side_bg)?;
        let consts = reflection_constants(&geometry, r, &JumpContours::straight(&geometry), spec)?;
        let v_inf = geometry.v_infinity(spec)?;
        let h0 = geometry.h0(spec)?;
        if h0.im.abs() > REALNESS_ABORT {
            return Err(RegionError::NotReal { what: "H0", residue: h0.im.abs() }.into());
        }
        let c_const = geometry.c_const(spec)?;
        let q0 = side_bg.q0();
        Ok(EllipticParams {
            side,
            background: side_bg,
            omega_small: consts.omega_small,
            omega_residue: consts.omega_residue,
            v_inf,
            h0: h0.re,
            h0_residue: h0.im.abs(),
            g_inf_big: h0.re + q0 * q0,
            g_inf: consts.g_inf,
            g_inf_residue: consts.g_inf_residue,
            x_offset: x_offset(consts.omega_small, &side_bg),
            c_const,
            geometry,
        })
    }

    /// Constants at `ξ` for `datum`.
    pub fn for_datum(xi: f64, datum: &InitialDatum, spec: &QuadratureSpec) -> Result<Self> {
        let bg = datum.background();
        let r = if xi < 0.0 {
            ReflectionData::for_datum(datum)
        } else {
            ReflectionData::for_datum(&datum.mirrored())
        };
        EllipticParams::from_reflection(xi, &bg, &r, spec)
    }

    /// Spatial coordinate of the problem actually solved.
    fn local_x(&self, x: f64) -> f64 {
        match self.side {
            EllipticSide::Left => x,
            EllipticSide::Right => -x,
        }
    }

    fn envelope_phase(&self, x: f64, t: f64) -> f64 {
        envelope_phase(&self.geometry, self.local_x(x), t, self.x_offset)
    }

    /// Representative of `2v∞ - 1/2` with real part in `(-1/2, 1/2]` and
    /// imaginary part reduced modulo `τ` to at most `Im τ/2` in size.
    /// The reduction changes the phase of the theta quotient but not its
    /// modulus.
    pub fn shifted_v_inf(&self) -> C64 {
        let mut w = 2.0 * self.v_inf - 0.5;
        let tau = self.geometry.tau;
        if tau.im.is_finite() {
            w -= tau * (w.im / tau.im).round();
        }
        w.re -= w.re.round();
        w
    }

    fn check_region(&self, x: f64, t: f64) -> Result<()> {
        let xi = x / t;
        let want = match self.side {
            EllipticSide::Left => self.geometry.xi,
            EllipticSide::Right => -self.geometry.xi,
        };
        if !(t > 0.0) || (xi - want).abs() > 1e-8 * want.abs().max(1.0) {
            return Err(RegionError::WrongRegion { xi, expected: "stored elliptic ξ", boundary: want }.into());
        }
        Ok(())
    }

    /// Theta-quotient form of the leading-order solution at `(x, t)` with
    /// `x/t` equal to the stored `ξ`:
    /// `q0(q0 + α_im)/q̄₋ · Θ(1/2)Θ(u - w)/(Θ(w)Θ(u - 1/2)) · e^{2i(g∞ - G∞t)}`
    /// with `u` the envelope phase and `w = 2v∞ - 1/2`.
    pub fn q_asymp(&self, x: f64, t: f64) -> Result<C64> {
        self.check_region(x, t)?;
        self.q_asymp_unchecked(x, t)
    }

    /// As [`EllipticParams::q_asymp`] with the constants frozen, for
    /// evaluation on a window around `ξ t`.
    pub fn q_asymp_unchecked(&self, x: f64, t: f64) -> Result<C64> {
        let g = &self.geometry;
        let q0 = g.q0;
        let prefactor = q0 * (q0 + g.alpha.im) / self.background.q_minus().conj();
        let phase = (2.0 * I * (self.g_inf - self.g_inf_big * t)).exp();
        let Some(ctx) = g.theta_context() else {
            return Ok(prefactor * phase);
        };
        let u = C64::new(self.envelope_phase(x, t), 0.0);
        let w = self.shifted_v_inf();
        let half = C64::new(0.5, 0.0);
        let num = elliptic::theta_cap(half, ctx)? * elliptic::theta_cap(u - w, ctx)?;
        let den = elliptic::theta_cap(w, ctx)? * elliptic::theta_cap(u - half, ctx)?;
        Ok(prefactor * num / den * phase)
    }

    /// `|q_asymp|² = (q0 + α_im)² - 4q0 α_im sn²(|α + iq0|(x - 2α_re t) - 2K X, m)`.
    pub fn q_abs2_sn(&self, x: f64, t: f64) -> Result<f64> {
        modulus_sq_sn(&self.geometry, self.local_x(x), t, self.x_offset)
    }
}

/// Phase of the envelope `|α + iq0|(x - 2α_re t)/(2K) - X`, with `x` the
/// coordinate of the problem actually solved.
pub fn envelope_phase(geo: &EllipticGeometry, x: f64, t: f64, x_offset: f64) -> f64 {
    (geo.alpha + I * geo.q0).norm() * (x - 2.0 * geo.alpha.re * t) / (2.0 * geo.k_val) - x_offset
}

/// `(q0 + α_im)² - 4q0 α_im sn²(2K·phase, m)` for a given offset `X`.
pub fn modulus_sq_sn(geo: &EllipticGeometry, x: f64, t: f64, x_offset: f64) -> Result<f64> {
    let q0 = geo.q0;
    let amp = 4.0 * q0 * geo.alpha.im;
    if amp == 0.0 {
        return Ok(q0 * q0);
    }
    let arg = 2.0 * geo.k_val * envelope_phase(geo, x, t, x_offset);
    let z = C64::new(arg, 0.0);
    let s = match geo.theta_context() {
        Some(ctx) => elliptic::sn_with(z, ctx)?,
        None => elliptic::sn(z, geo.m)?,
    };
    Ok((q0 + geo.alpha.im).powi(2) - amp * s.re * s.re)
}

/// Envelope bounds `(|q0 - α_im|, q0 + α_im)` of the modulated wave.
pub fn envelope_bounds(geo: &EllipticGeometry) -> (f64, f64) {
    ((geo.q0 - geo.alpha.im).abs(), geo.q0 + geo.alpha.im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_predicate() {
        let (a, b) = (C64::new(0.0, -1.0), C64::new(0.0, 1.0));
        assert!(crosses(C64::new(-1.0, 0.0), C64::new(1.0, 0.0), a, b));
        assert!(!crosses(C64::new(0.0, 1.0), C64::new(1.0, 0.0), a, b));
        assert!(crosses(C64::new(0.0, 1.0), C64::new(0.0, 0.0), a, b));
        assert!(!crosses(C64::new(0.5, -1.0), C64::new(0.5, 1.0), a, b));
    }

    #[test]
    fn boundary_endpoints() {
        let bg = Background::symmetric(1.0).unwrap();
        assert_eq!(solve_k0(0.0, &bg).unwrap(), 0.0);
        let k0 = solve_k0(-region_boundary(&bg), &bg).unwrap();
        assert!((k0 + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(solve_k0(0.1, &bg).is_err());
    }

    #[test]
    fn x_offset_trivial_cases() {
        let bg = Background::symmetric(1.0).unwrap();
        assert_eq!(x_offset(0.0, &bg), -0.25);
        let phi = 0.3;
        let tilted = Background::with_phases(1.0, phi, phi).unwrap();
        assert!((x_offset(0.7, &tilted) + (0.7 + phi) / (2.0 * PI) + 0.25).abs() < 1e-15);
    }
}
