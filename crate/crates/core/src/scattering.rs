//! Direct scattering on a nonzero background: Jost solutions by integrating
//! the spatial Lax equation `Ψ_x = (ikσ₃ + Q)Ψ`, the scattering matrix, the
//! reflection coefficient and a grid scan for zeros of `a`.

use crate::branchfn::{self, Background, Infinity, LimitSide};
use crate::error::ScatterError;
use crate::mat2::Mat2;
use num_complex::Complex64 as C64;

const I: C64 = C64::new(0.0, 1.0);

/// Deviation from the background below which a sample counts as background.
pub const SUPPORT_TOL: f64 = 1e-12;

/// `q(x, 0) = βe^{iχ}` on `|x| < L` and `q0` outside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDatum {
    q0: f64,
    beta: f64,
    chi: f64,
    half_width: f64,
}

impl BoxDatum {
    pub fn new(q0: f64, beta: f64, chi: f64, half_width: f64) -> Result<Self, ScatterError> {
        if !(q0 > 0.0 && beta > 0.0 && half_width > 0.0) || !chi.is_finite() {
            return Err(ScatterError::InvalidDatum(format!(
                "box needs q0, beta, L > 0 (got q0 = {q0}, beta = {beta}, L = {half_width})"
            )));
        }
        Ok(BoxDatum { q0, beta, chi, half_width })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Reflection coefficient from the explicit piecewise-constant solution.
    ///
    /// The prefactor is `e^{-2iλL}`: with Jost solutions normalized as
    /// `E±e^{iλxσ₃}` a box centred at the origin has, to first order in
    /// `β - q0`, a real reflection coefficient on the real line. The often
    /// quoted `e^{2iλL}` corresponds to the same box translated by `2L`.
    pub fn reflection(&self, k: C64, side: LimitSide) -> Result<C64, ScatterError> {
        let bg = Background::symmetric(self.q0)?;
        let (q0, beta, chi, l) = (self.q0, self.beta, self.chi, self.half_width);
        let lam = branchfn::lambda(k, &bg, side);
        let w2 = k * k + beta * beta;
        let w = w2.sqrt();
        // w cot(2Lw) is even in w and tends to 1/(2L) at w = 0
        let wcot = if w.norm() * l < 1e-4 {
            let z = 2.0 * l * w;
            (1.0 - z * z / 3.0) / (2.0 * l)
        } else {
            w / (2.0 * l * w).tan()
        };
        let num = (-2.0 * I * lam * l).exp() * ((beta * chi.cos() - q0) * k - I * beta * lam * chi.sin());
        let den = lam * wcot - I * (k * k + q0 * beta * chi.cos());
        if den.norm() == 0.0 {
            return Err(ScatterError::SpectralSingularity(k));
        }
        Ok(num / den)
    }
}

/// Samples of a datum on a uniform grid, linearly interpolated in between.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledDatum {
    x0: f64,
    dx: f64,
    values: Vec<C64>,
    bg: Background,
    margin: f64,
}

impl SampledDatum {
    /// `margin` is the declared half-width `ε` of the strip `|Im λ| < ε` in
    /// which the scattering data may be continued off the spectrum.
    pub fn new(x0: f64, dx: f64, values: Vec<C64>, bg: Background, margin: f64) -> Result<Self, ScatterError> {
        if values.len() < 2 || !(dx > 0.0) || !x0.is_finite() {
            return Err(ScatterError::InvalidDatum("need at least two samples on an increasing grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ScatterError::InvalidDatum("non-finite sample".into()));
        }
        let tol = 1e-10 * bg.q0().max(1.0);
        let (first, last) = (values[0], values[values.len() - 1]);
        if (first - bg.q_minus()).norm() > tol || (last - bg.q_plus()).norm() > tol {
            return Err(ScatterError::InvalidDatum(format!(
                "grid ends deviate from the background by {:e} and {:e}",
                (first - bg.q_minus()).norm(),
                (last - bg.q_plus()).norm()
            )));
        }
        if !(margin >= 0.0) {
            return Err(ScatterError::InvalidDatum(format!("analyticity margin {margin} must be non-negative")));
        }
        Ok(SampledDatum { x0, dx, values, bg, margin })
    }

    /// Samples on a grid given explicitly; the grid must be uniform to 1e-9
    /// relative.
    pub fn from_grid(x: &[f64], values: Vec<C64>, bg: Background, margin: f64) -> Result<Self, ScatterError> {
        if x.len() != values.len() || x.len() < 2 {
            return Err(ScatterError::InvalidDatum("grid and sample counts differ".into()));
        }
        let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
        let uniform = x.windows(2).all(|w| ((w[1] - w[0]) - dx).abs() <= 1e-9 * dx.abs().max(1.0));
        if !uniform {
            return Err(ScatterError::InvalidDatum("grid is not uniform".into()));
        }
        SampledDatum::new(x[0], dx, values, bg, margin)
    }

    pub fn background(&self) -> &Background {
        &self.bg
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.x0 + self.dx * i as f64)
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    fn value_at(&self, x: f64) -> C64 {
        let n = self.values.len();
        let s = (x - self.x0) / self.dx;
        if s <= 0.0 {
            return self.bg.q_minus();
        }
        if s >= (n - 1) as f64 {
            return self.bg.q_plus();
        }
        let i = (s.floor() as usize).min(n - 2);
        let t = s - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    /// Smallest interval outside which the samples equal the background to
    /// `SUPPORT_TOL`.
    fn support(&self) -> (f64, f64) {
        let tol = SUPPORT_TOL * self.bg.q0().max(1.0);
        let n = self.values.len();
        let lo = self.values.iter().position(|v| (v - self.bg.q_minus()).norm() > tol).unwrap_or(0);
        let hi = self.values.iter().rposition(|v| (v - self.bg.q_plus()).norm() > tol).unwrap_or(n - 1);
        let lo = lo.saturating_sub(1);
        let hi = (hi + 1).min(n - 1);
        if lo >= hi {
            let mid = self.x0 + self.dx * (n / 2) as f64;
            return (mid - self.dx, mid + self.dx);
        }
        (self.x0 + self.dx * lo as f64, self.x0 + self.dx * hi as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialDatum {
    Box(BoxDatum),
    Sampled(SampledDatum),
}

impl InitialDatum {
    pub fn background(&self) -> Background {
        match self {
            InitialDatum::Box(b) => Background::symmetric(b.q0).expect("validated box amplitude"),
            InitialDatum::Sampled(s) => s.bg,
        }
    }

    pub fn value_at(&self, x: f64) -> C64 {
        match self {
            InitialDatum::Box(b) => {
                if x.abs() < b.half_width {
                    C64::from_polar(b.beta, b.chi)
                } else {
                    C64::new(b.q0, 0.0)
                }
            }
            InitialDatum::Sampled(s) => s.value_at(x),
        }
    }

    /// Interval carrying the perturbation.
    pub fn support(&self) -> (f64, f64) {
        match self {
            InitialDatum::Box(b) => (-b.half_width, b.half_width),
            InitialDatum::Sampled(s) => s.support(),
        }
    }

    /// Half-width of the strip `|Im λ| < ε` where continuation is allowed.
    pub fn analyticity_margin(&self) -> f64 {
        match self {
            InitialDatum::Box(_) => f64::INFINITY,
            InitialDatum::Sampled(s) => s.margin,
        }
    }

    /// True when the datum coincides with its background everywhere, so that
    /// `r ≡ 0`.
    pub fn is_background(&self) -> bool {
        match self {
            InitialDatum::Box(b) => b.beta == b.q0 && C64::from_polar(1.0, b.chi) == C64::new(1.0, 0.0),
            InitialDatum::Sampled(s) => {
                let q = s.bg.q_minus();
                s.bg.q_plus() == q && s.values.iter().all(|v| (v - q).norm() <= SUPPORT_TOL * s.bg.q0())
            }
        }
    }

    /// The datum `q(-x, 0)`, with boundary values exchanged.
    pub fn mirrored(&self) -> InitialDatum {
        match self {
            InitialDatum::Box(b) => InitialDatum::Box(*b),
            InitialDatum::Sampled(s) => {
                let n = s.values.len();
                let x_last = s.x0 + s.dx * (n - 1) as f64;
                let mut values = s.values.clone();
                values.reverse();
                InitialDatum::Sampled(SampledDatum { x0: -x_last, dx: s.dx, values, bg: s.bg.mirrored(), margin: s.margin })
            }
        }
    }

    /// Points where the datum (or its slope) is discontinuous inside the
    /// support; the integrator never steps across them.
    fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = self.support();
        match self {
            InitialDatum::Box(_) => vec![lo, hi],
            InitialDatum::Sampled(s) => {
                let i0 = ((lo - s.x0) / s.dx).round() as usize;
                let i1 = ((hi - s.x0) / s.dx).round() as usize;
                (i0..=i1).map(|i| s.x0 + s.dx * i as f64).collect()
            }
        }
    }
}

/// Direction of integration for the Jost solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    FromLeft,
    FromRight,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeTolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_steps: usize,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        OdeTolerance { rel: 1e-12, abs: 1e-14, max_steps: 200_000 }
    }
}

type State = [C64; 4];

/// Datum value inside the smooth piece whose midpoint is `mid`; boxes are
/// constant on each piece, so their stages never see the jump.
fn piece_value(x: f64, mid: f64, datum: &InitialDatum) -> C64 {
    match datum {
        InitialDatum::Box(_) => datum.value_at(mid),
        InitialDatum::Sampled(_) => datum.value_at(x),
    }
}

fn rhs(x: f64, mid: f64, y: &State, k: C64, datum: &InitialDatum) -> State {
    let q = piece_value(x, mid, datum);
    let ik = I * k;
    // rows of ikσ₃ + Q with Q = [[0, q], [-q̄, 0]]
    [
        ik * y[0] + q * y[2],
        ik * y[1] + q * y[3],
        -q.conj() * y[0] - ik * y[2],
        -q.conj() * y[1] - ik * y[3],
    ]
}

fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, v) in terms {
        for i in 0..4 {
            out[i] += v[i] * (h * c);
        }
    }
    out
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Adaptive Dormand–Prince integration of the Lax equation on `[xa, xb]`
/// (either orientation) where the datum is smooth.
fn dopri_piece(y0: State, xa: f64, xb: f64, k: C64, datum: &InitialDatum, tol: &OdeTolerance, steps: &mut usize) -> Result<State, ScatterError> {
    let span = xb - xa;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mid = 0.5 * (xa + xb);
    let f = |x: f64, y: &State| rhs(x, mid, y, k, datum);
    let mut x = xa;
    let mut y = y0;
    let rate = k.norm() + datum.background().q0() + 1.0;
    let mut h = dir * span.abs().min(0.1 / rate);
    let mut k1 = f(x, &y);
    loop {
        if (xb - x) * dir <= 0.0 {
            return Ok(y);
        }
        if (x + h - xb) * dir > 0.0 {
            h = xb - x;
        }
        *steps += 1;
        if *steps > tol.max_steps {
            return Err(ScatterError::Stepper(x));
        }
        let k2 = f(x + C2 * h, &axpy(&y, &[(A21, &k1)], h));
        let k3 = f(x + C3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(x + C4 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(x + C5 * h, &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        // the last stage sits exactly on the far end of the step
        let x_end = if (x + h - xb).abs() <= 1e-15 * xb.abs().max(1.0) { xb } else { x + h };
        let k6 = f(x + h, &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h));
        let y_new = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(x + h, &y_new);
        let err_vec = axpy(&[C64::new(0.0, 0.0); 4], &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)], h);
        let mut err: f64 = 0.0;
        for i in 0..4 {
            let sc = tol.abs + tol.rel * y[i].norm().max(y_new[i].norm());
            err = err.max(err_vec[i].norm() / sc);
        }
        if !err.is_finite() {
            return Err(ScatterError::Stepper(x));
        }
        if err <= 1.0 {
            x = x_end;
            y = y_new;
            k1 = k7;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < 1e-14 * x.abs().max(1.0) {
            return Err(ScatterError::Stepper(x));
        }
    }
}

fn to_state(m: &Mat2) -> State {
    [m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1]]
}

fn from_state(s: &State) -> Mat2 {
    Mat2::new(s[0], s[1], s[2], s[3])
}

fn check_point(datum: &InitialDatum, k: C64, side: LimitSide) -> Result<(Background, C64), ScatterError> {
    let bg = datum.background();
    let q0 = bg.q0();
    if (k - I * q0).norm() <= branchfn::CUT_TOL * q0.max(1.0) || (k + I * q0).norm() <= branchfn::CUT_TOL * q0.max(1.0) {
        return Err(ScatterError::ExcludedPoint(k));
    }
    let lam = branchfn::lambda(k, &bg, side);
    let eps = datum.analyticity_margin();
    if lam.im.abs() >= eps && eps.is_finite() && !(lam.im == 0.0 && eps == 0.0) {
        return Err(ScatterError::OutsideStrip { k, eps });
    }
    Ok((bg, lam))
}

/// Propagate the Jost solution across the support.
///
/// `FromLeft` starts at the left edge with `Ψ₋ = E₋e^{iλxσ₃}` and returns
/// `μ₋ = Ψ₋e^{-iλxσ₃}` at the right edge; `FromRight` does the mirror image
/// and returns `μ₊` at the left edge.
pub fn integrate_mu(datum: &InitialDatum, k: C64, direction: Direction, side: LimitSide, tol: &OdeTolerance) -> Result<Mat2, ScatterError> {
    let (bg, lam) = check_point(datum, k, side)?;
    let (xl, xr) = datum.support();
    let mut nodes = datum.breakpoints();
    let (start, end, at) = match direction {
        Direction::FromLeft => (xl, xr, Infinity::Minus),
        Direction::FromRight => {
            nodes.reverse();
            (xr, xl, Infinity::Plus)
        }
    };
    let e = branchfn::boundary_eigenmatrix(&bg, at, k, side)?;
    let phase = |x: f64| Mat2::diag((I * lam * x).exp(), (-I * lam * x).exp());
    let mut y = to_state(&(e * phase(start)));
    let mut steps = 0usize;
    let mut x = start;
    for &node in nodes.iter().chain(std::iter::once(&end)) {
        if (node - x) * (end - start) <= 0.0 {
            continue;
        }
        y = dopri_piece(y, x, node, k, datum, tol, &mut steps)?;
        x = node;
    }
    let inv_phase = Mat2::diag((-I * lam * end).exp(), (I * lam * end).exp());
    Ok(from_state(&y) * inv_phase)
}

/// Scattering matrix `S` with `Ψ₋ = Ψ₊S`, read off at the right edge of the
/// support.
pub fn scattering_matrix(datum: &InitialDatum, k: C64, side: LimitSide, tol: &OdeTolerance) -> Result<Mat2, ScatterError> {
    let (bg, lam) = check_point(datum, k, side)?;
    let mu = integrate_mu(datum, k, Direction::FromLeft, side, tol)?;
    let (_, xr) = datum.support();
    let e_plus = branchfn::boundary_eigenmatrix(&bg, Infinity::Plus, k, side)?;
    let e_inv = e_plus.inverse().ok_or(ScatterError::ExcludedPoint(k))?;
    let left = Mat2::diag((-I * lam * xr).exp(), (I * lam * xr).exp());
    let right = Mat2::diag((I * lam * xr).exp(), (-I * lam * xr).exp());
    Ok(left * e_inv * mu * right)
}

/// `(a, b) = (s₁₁, s₂₁)`.
pub fn scattering_entries(datum: &InitialDatum, k: C64, side: LimitSide) -> Result<(C64, C64), ScatterError> {
    let s = scattering_matrix(datum, k, side, &OdeTolerance::default())?;
    Ok((s.get(0, 0), s.get(1, 0)))
}

/// How a reflection coefficient is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum ReflectionData {
    /// Explicit formula for a box datum.
    ClosedForm(BoxDatum),
    /// Scattering matrix from the Lax ODE.
    Ode(InitialDatum),
    /// A fixed value everywhere, for diagnostics and reference cases.
    Constant(C64),
}

impl ReflectionData {
    /// Closed form for boxes, ODE otherwise.
    pub fn for_datum(datum: &InitialDatum) -> Self {
        match datum {
            InitialDatum::Box(b) => ReflectionData::ClosedForm(*b),
            other => ReflectionData::Ode(other.clone()),
        }
    }

    pub fn source(&self) -> &'static str {
        match self {
            ReflectionData::ClosedForm(_) => "closed-form box",
            ReflectionData::Ode(_) => "ode",
            ReflectionData::Constant(_) => "constant",
        }
    }

    /// `r(k) = -b(k)/ā(k)`, with `ā = s₂₂`.
    pub fn r(&self, k: C64, side: LimitSide) -> Result<C64, ScatterError> {
        match self {
            ReflectionData::ClosedForm(b) => b.reflection(k, side),
            ReflectionData::Constant(c) => Ok(*c),
            ReflectionData::Ode(d) => {
                let s = scattering_matrix(d, k, side, &OdeTolerance::default())?;
                let abar = s.get(1, 1);
                if abar.norm() < 1e-14 {
                    return Err(ScatterError::SpectralSingularity(k));
                }
                Ok(-s.get(1, 0) / abar)
            }
        }
    }

    /// Schwartz conjugate `r̄(k) = conj(r(conj k))`.
    pub fn r_bar(&self, k: C64, side: LimitSide) -> Result<C64, ScatterError> {
        Ok(self.r(k.conj(), side)?.conj())
    }

    /// `ln(1 + r r̄)` at a real point.
    pub fn log_one_plus(&self, nu: f64) -> Result<f64, ScatterError> {
        let r = self.r(C64::new(nu, 0.0), LimitSide::Right)?;
        Ok(r.norm_sqr().ln_1p())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumReport {
    pub min_abs_a: f64,
    pub location: C64,
    pub threshold: f64,
    pub certified: bool,
}

/// Scan `|a|` over `grid` and report its minimum; certification means the
/// minimum stays above `threshold`.
pub fn certify_no_discrete_spectrum(datum: &InitialDatum, grid: &[C64], threshold: f64) -> SpectrumReport {
    let tol = OdeTolerance::default();
    let mut best = (f64::INFINITY, C64::new(f64::NAN, f64::NAN));
    for &k in grid {
        let v = match scattering_matrix(datum, k, LimitSide::Right, &tol) {
            Ok(s) => s.get(0, 0).norm(),
            Err(_) => continue,
        };
        if v < best.0 {
            best = (v, k);
        }
    }
    SpectrumReport { min_abs_a: best.0, location: best.1, threshold, certified: best.0 > threshold }
}

/// Rectangular grid `[re_lo, re_hi] × [im_lo, im_hi]` with `n_re × n_im` points.
pub fn rectangle_grid(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Vec<C64> {
    let lin = |(lo, hi): (f64, f64), n: usize, i: usize| if n <= 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
    (0..n_im).flat_map(|j| (0..n_re).map(move |i| C64::new(lin(re, n_re, i), lin(im, n_im, j)))).collect()
}
