//! Branch-cut aware square roots and the derived spectral functions.
//!
//! Every fractional power here is the continuation from `k = +∞` along paths
//! that avoid the cuts. For a single factor `(k - a)^{1/2}` that continuation
//! is the square root whose argument lives in `[-π/2, 3π/2)`, so its cut runs
//! straight down from `a`. Products of two such factors then have their cut on
//! the vertical segment joining the two points, which is exactly the geometry
//! of `B = i[-q0, q0]`.

use crate::error::BranchError;
use crate::mat2::Mat2;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Distance below which a point counts as lying on a cut.
pub const CUT_TOL: f64 = 1e-13;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Background {
    q0: f64,
    q_minus: C64,
    q_plus: C64,
}

impl Background {
    pub fn new(q0: f64, q_minus: C64, q_plus: C64) -> Result<Self, BranchError> {
        if !(q0 > 0.0) || !q0.is_finite() {
            return Err(BranchError::InvalidBackground(format!("q0 = {q0} must be positive")));
        }
        for (name, q) in [("q_minus", q_minus), ("q_plus", q_plus)] {
            if ((q.norm() - q0) / q0).abs() > 1e-12 {
                return Err(BranchError::InvalidBackground(format!(
                    "|{name}| = {} differs from q0 = {q0}",
                    q.norm()
                )));
            }
        }
        Ok(Background { q0, q_minus, q_plus })
    }

    /// Background with both boundary values equal to the real amplitude `q0`.
    pub fn symmetric(q0: f64) -> Result<Self, BranchError> {
        Background::new(q0, C64::new(q0, 0.0), C64::new(q0, 0.0))
    }

    pub fn with_phases(q0: f64, phi_minus: f64, phi_plus: f64) -> Result<Self, BranchError> {
        Background::new(q0, C64::from_polar(q0, phi_minus), C64::from_polar(q0, phi_plus))
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn q_minus(&self) -> C64 {
        self.q_minus
    }

    pub fn q_plus(&self) -> C64 {
        self.q_plus
    }

    /// Background seen by the datum `q(-x)`: the boundary values trade places.
    pub fn mirrored(&self) -> Self {
        Background { q0: self.q0, q_minus: self.q_plus, q_plus: self.q_minus }
    }
}

/// Which one-sided limit to return for points lying on a cut.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LimitSide {
    #[default]
    Right,
    Left,
}

/// Upper elliptic branch point `α` together with the real vertex `k0` of the
/// polyline cut `ᾱ → k0 → α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPoints {
    alpha: C64,
    vertex: f64,
}

impl BranchPoints {
    pub fn new(alpha: C64, vertex: f64) -> Result<Self, BranchError> {
        if alpha.im < 0.0 || !alpha.is_finite() || !vertex.is_finite() {
            return Err(BranchError::InvalidBackground(format!(
                "branch point {alpha} must have non-negative imaginary part"
            )));
        }
        Ok(BranchPoints { alpha, vertex })
    }

    /// Straight vertical cut between `ᾱ` and `α`.
    pub fn vertical(alpha: C64) -> Result<Self, BranchError> {
        BranchPoints::new(alpha, alpha.re)
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn vertex(&self) -> f64 {
        self.vertex
    }

    fn vertex_c(&self) -> C64 {
        C64::new(self.vertex, 0.0)
    }

    /// True if `k` is within `CUT_TOL` of either leg of the polyline.
    pub fn on_polyline(&self, k: C64) -> bool {
        let (a, ab, v) = (self.alpha, self.alpha.conj(), self.vertex_c());
        seg_dist(k, ab, v) <= CUT_TOL * scale(k) || seg_dist(k, v, a) <= CUT_TOL * scale(k)
    }

    /// Whether the triangle `(ᾱ, k0, α)` lies to the right of the vertical
    /// segment `[ᾱ, α]` (polyline bulges right).
    fn bulges_right(&self) -> bool {
        self.vertex > self.alpha.re
    }

    /// Points where the vertical-cut root must be negated to move its cut onto
    /// the polyline.
    fn flipped(&self, k: C64) -> bool {
        let (a, ab, v) = (self.alpha, self.alpha.conj(), self.vertex_c());
        if a.im == 0.0 || self.vertex == a.re {
            return false;
        }
        let on_vertical = (k.re - a.re).abs() <= CUT_TOL * scale(k) && k.im.abs() < a.im;
        if on_vertical {
            return self.bulges_right();
        }
        strictly_inside(k, ab, v, a)
    }
}

fn scale(k: C64) -> f64 {
    k.norm().max(1.0)
}

fn seg_dist(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

fn cross(o: C64, a: C64, b: C64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

fn strictly_inside(k: C64, a: C64, b: C64, c: C64) -> bool {
    let d1 = cross(a, b, k);
    let d2 = cross(b, c, k);
    let d3 = cross(c, a, k);
    (d1 > 0.0 && d2 > 0.0 && d3 > 0.0) || (d1 < 0.0 && d2 < 0.0 && d3 < 0.0)
}

/// Argument of `w` taken in `[-π/2, 3π/2)`.
pub fn arg_down(w: C64) -> f64 {
    let a = w.im.atan2(w.re);
    if a < -PI / 2.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Square root with its cut along the negative imaginary direction.
pub fn sqrt_down(w: C64) -> C64 {
    if w == C64::new(0.0, 0.0) {
        return w;
    }
    C64::from_polar(w.norm().sqrt(), 0.5 * arg_down(w))
}

fn on_b(k: C64, q0: f64) -> bool {
    k.re.abs() <= CUT_TOL * scale(k) && k.im.abs() <= q0
}

/// Projection onto the imaginary axis with a positive-zero real part, which
/// makes the downward roots return their right-hand limits.
fn snap_to_b(k: C64) -> C64 {
    C64::new(0.0, k.im)
}

/// `λ(k) = (k² + q0²)^{1/2}` with cut `B`, `λ ~ k` at infinity.
pub fn lambda(k: C64, bg: &Background, side: LimitSide) -> C64 {
    let q0 = bg.q0;
    if on_b(k, q0) {
        let v = C64::new(((q0 - k.im) * (q0 + k.im)).max(0.0).sqrt(), 0.0);
        return match side {
            LimitSide::Right => v,
            LimitSide::Left => -v,
        };
    }
    if k.im == 0.0 {
        return C64::new(k.re.signum() * k.re.hypot(q0), 0.0);
    }
    sqrt_down(k - I * q0) * sqrt_down(k + I * q0)
}

/// Imaginary part of the right-continuous `λ`.
pub fn im_lambda(k: C64, bg: &Background) -> f64 {
    lambda(k, bg, LimitSide::Right).im
}

fn is_branch_point(k: C64, q0: f64) -> bool {
    (k - I * q0).norm() <= CUT_TOL * scale(k) || (k + I * q0).norm() <= CUT_TOL * scale(k)
}

/// `d(k) = 2λ/(λ + k)`, the common determinant of the Jost solutions.
pub fn d_det(k: C64, bg: &Background, side: LimitSide) -> Result<C64, BranchError> {
    if is_branch_point(k, bg.q0) {
        return Err(BranchError::Singular(k));
    }
    let l = lambda(k, bg, side);
    Ok(2.0 * l / (l + k))
}

/// `λ - k` computed as `q0²/(λ + k)` to avoid cancellation for large `k`.
pub fn lambda_minus_k(k: C64, bg: &Background, side: LimitSide) -> C64 {
    let l = lambda(k, bg, side);
    let s = l + k;
    if s.norm() == 0.0 {
        l - k
    } else {
        bg.q0 * bg.q0 / s
    }
}

/// `[(k - α)(k - ᾱ)]^{1/2}` with cut on the polyline `ᾱ → k0 → α`,
/// right-continuous on it.
fn sqrt_quadratic(k: C64, bp: &BranchPoints, side: LimitSide) -> C64 {
    let a = bp.alpha;
    let raw = sqrt_down(k - a) * sqrt_down(k - a.conj());
    if a.im == 0.0 {
        return raw;
    }
    if bp.on_polyline(k) && bp.vertex != a.re {
        let near_end = (k - a).norm() <= CUT_TOL * scale(k) || (k - a.conj()).norm() <= CUT_TOL * scale(k);
        if near_end {
            return C64::new(0.0, 0.0);
        }
        let right = if bp.bulges_right() { raw } else { -raw };
        return match side {
            LimitSide::Right => right,
            LimitSide::Left => -right,
        };
    }
    let on_vertical = (k.re - a.re).abs() <= CUT_TOL * scale(k) && k.im.abs() < a.im;
    if bp.vertex == a.re && on_vertical {
        let v = sqrt_down(C64::new(a.re, k.im) - a) * sqrt_down(C64::new(a.re, k.im) - a.conj());
        return match side {
            LimitSide::Right => v,
            LimitSide::Left => -v,
        };
    }
    if bp.flipped(k) {
        -raw
    } else {
        raw
    }
}

/// `γ(k) = [(k² + q0²)(k - α)(k - ᾱ)]^{1/2}`, `γ ~ k²` at infinity, with cuts
/// `B` and the polyline through `k0`.
pub fn gamma(k: C64, bg: &Background, bp: &BranchPoints, side: LimitSide) -> C64 {
    lambda(k, bg, side) * sqrt_quadratic(k, bp, side)
}

/// `Λ(k) = ((k - iq0)/(k + iq0))^{1/4}`, tending to one at infinity.
/// On `B` the right-hand limit is returned.
pub fn lambda_qr(k: C64, bg: &Background) -> C64 {
    let q0 = bg.q0;
    let kk = if on_b(k, q0) { snap_to_b(k) } else { k };
    let (w1, w2) = (kk - I * q0, kk + I * q0);
    let modulus = (w1.norm() / w2.norm()).powf(0.25);
    C64::from_polar(modulus, 0.25 * (arg_down(w1) - arg_down(w2)))
}

/// `p(k) = [(k - iq0)(k - α)/((k + iq0)(k - ᾱ))]^{1/4}` with cuts `B` and the
/// polyline; on either cut the left limit equals `i` times the right limit.
pub fn p_fn(k: C64, bg: &Background, bp: &BranchPoints, side: LimitSide) -> C64 {
    let q0 = bg.q0;
    let a = bp.alpha;
    let on_cut = on_b(k, q0) || (a.im > 0.0 && bp.on_polyline(k));
    let kk = if on_b(k, q0) {
        snap_to_b(k)
    } else if bp.vertex == a.re && on_cut {
        C64::new(a.re, k.im)
    } else {
        k
    };
    let (w1, w2, w3, w4) = (kk - I * q0, kk + I * q0, kk - a, kk - a.conj());
    let mut phase = arg_down(w1) - arg_down(w2);
    let mut ang = arg_down(w3) - arg_down(w4);
    if a.im > 0.0 && bp.vertex != a.re {
        let polyline = bp.on_polyline(k) && !on_b(k, q0);
        let interior = if polyline {
            // right-hand limit: interior when the triangle lies to the right
            !bp.bulges_right()
        } else {
            bp.flipped(k)
        };
        if interior {
            ang += if bp.bulges_right() { 2.0 * PI } else { -2.0 * PI };
        }
    }
    phase += ang;
    let modulus = (w1.norm() * w3.norm() / (w2.norm() * w4.norm())).powf(0.25);
    let right = C64::from_polar(modulus, 0.25 * phase);
    match (on_cut, side) {
        (true, LimitSide::Left) => right * I,
        _ => right,
    }
}

/// `θ(ξ, k) = λ(k)(ξ - 2k)`.
pub fn theta_phase(xi: f64, k: C64, bg: &Background, side: LimitSide) -> C64 {
    lambda(k, bg, side) * (xi - 2.0 * k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Infinity {
    Minus,
    Plus,
}

/// Eigenvector matrix `E±(k)` of the asymptotic Lax operator, with
/// `det E± = d(k)`.
pub fn boundary_eigenmatrix(bg: &Background, at: Infinity, k: C64, side: LimitSide) -> Result<Mat2, BranchError> {
    if is_branch_point(k, bg.q0) {
        return Err(BranchError::Singular(k));
    }
    let q = match at {
        Infinity::Minus => bg.q_minus,
        Infinity::Plus => bg.q_plus,
    };
    let lk = lambda_minus_k(k, bg, side);
    let one = C64::new(1.0, 0.0);
    Ok(Mat2::new(one, I * lk / q.conj(), I * lk / q, one))
}
