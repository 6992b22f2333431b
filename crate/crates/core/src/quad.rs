//! Adaptive Gauss–Kronrod quadrature along straight complex segments and
//! rays, Brent root bracketing, and continuous logarithms along sampled paths.

use crate::error::QuadError;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Kind of integrable endpoint singularity of an integrand.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Singularity {
    #[default]
    None,
    /// Behaves like `|z - z_end|^{-1/2}`.
    InvSqrt,
    /// Behaves like `ln |z - z_end|`.
    Logarithmic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSegment {
    pub start: C64,
    pub end: C64,
    pub start_singularity: Singularity,
    pub end_singularity: Singularity,
}

impl PathSegment {
    pub fn new(start: C64, end: C64) -> Self {
        PathSegment { start, end, start_singularity: Singularity::None, end_singularity: Singularity::None }
    }

    pub fn with_singularities(mut self, start: Singularity, end: Singularity) -> Self {
        self.start_singularity = start;
        self.end_singularity = end;
        self
    }

    pub fn point(&self, s: f64) -> C64 {
        self.start + (self.end - self.start) * s
    }

    pub fn reversed(&self) -> Self {
        PathSegment {
            start: self.end,
            end: self.start,
            start_singularity: self.end_singularity,
            end_singularity: self.start_singularity,
        }
    }
}

/// Ordered chain of segments.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    segments: Vec<PathSegment>,
}

impl Contour {
    pub fn new(segments: Vec<PathSegment>) -> Option<Self> {
        let chained = segments.windows(2).all(|w| (w[0].end - w[1].start).norm() <= 1e-14 * w[0].end.norm().max(1.0));
        (!segments.is_empty() && chained).then_some(Contour { segments })
    }

    /// Polyline through the given vertices with no singular endpoints.
    pub fn polyline(points: &[C64]) -> Option<Self> {
        Contour::new(points.windows(2).map(|w| PathSegment::new(w[0], w[1])).collect())
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn reversed(&self) -> Self {
        Contour { segments: self.segments.iter().rev().map(PathSegment::reversed).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivision_depth: u32,
    pub tail_cutoff: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { rel_tol: 1e-10, abs_tol: 1e-13, max_subdivision_depth: 24, tail_cutoff: 1e-14 }
    }
}

impl QuadratureSpec {
    /// Tolerances multiplied by `factor`, used by the `--tol-scale` option.
    pub fn scaled(&self, factor: f64) -> Self {
        QuadratureSpec { rel_tol: self.rel_tol * factor, abs_tol: self.abs_tol * factor, ..*self }
    }
}

// 10-point Gauss / 21-point Kronrod pair on [-1, 1].
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_929_457,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// One Gauss–Kronrod panel of a real-parameter integrand on `[a, b]`:
/// Kronrod value, `|K - G|`, and the Kronrod integral of `|f|`.
fn gk21<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> Result<(C64, f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NotFinite(C64::new(c, 0.0)));
    }
    let mut rk = fc * WGK[10];
    let mut rabs = fc.norm() * WGK[10];
    let mut rg = C64::new(0.0, 0.0);
    for i in 0..10 {
        let dx = h * XGK[i];
        let (f1, f2) = (f(c - dx), f(c + dx));
        if !f1.is_finite() || !f2.is_finite() {
            return Err(QuadError::NotFinite(C64::new(c + dx, 0.0)));
        }
        rk += (f1 + f2) * WGK[i];
        rabs += (f1.norm() + f2.norm()) * WGK[i];
        if i % 2 == 1 {
            rg += (f1 + f2) * WG[i / 2];
        }
    }
    let k = rk * h;
    let g = rg * h;
    Ok((k, (k - g).norm(), rabs * h.abs()))
}

struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    value: C64,
    err: f64,
    abs: f64,
}

/// Relative size of the rounding noise floor below which an error estimate
/// is not trusted to shrink further.
const ROUNDOFF: f64 = 50.0 * f64::EPSILON;

/// Globally adaptive integration of a real-parameter integrand on `[a, b]`.
pub fn adapt_real<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<(C64, f64), QuadError> {
    let max_panels = 4 * (spec.max_subdivision_depth as usize).max(1) * 64;
    let panels = adapt_panels(&mut f, a, b, spec, max_panels)?;
    Ok((panels.iter().map(|p| p.value).sum(), panels.iter().map(|p| p.err).sum()))
}

fn adapt_panels<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64, spec: &QuadratureSpec, max_panels: usize) -> Result<Vec<Panel>, QuadError> {
    if a == b {
        return Ok(Vec::new());
    }
    let (v, e, ab) = gk21(f, a, b)?;
    let mut panels = vec![Panel { a, b, depth: 0, value: v, err: e, abs: ab }];
    loop {
        let total: C64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.err).sum();
        let noise: f64 = ROUNDOFF * panels.iter().map(|p| p.abs).sum::<f64>();
        if err <= spec.abs_tol.max(spec.rel_tol * total.norm()).max(noise) {
            return Ok(panels);
        }
        // split the worst panel that may still be refined
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.depth < spec.max_subdivision_depth)
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return Err(QuadError::NonConvergence { estimate: total, error: err });
        };
        if panels.len() >= max_panels {
            return Err(QuadError::NonConvergence { estimate: total, error: err });
        }
        let p = panels.swap_remove(i);
        let m = 0.5 * (p.a + p.b);
        let (v1, e1, a1) = gk21(f, p.a, m)?;
        let (v2, e2, a2) = gk21(f, m, p.b)?;
        panels.push(Panel { a: p.a, b: m, depth: p.depth + 1, value: v1, err: e1, abs: a1 });
        panels.push(Panel { a: m, b: p.b, depth: p.depth + 1, value: v2, err: e2, abs: a2 });
    }
}

/// Kronrod nodes and weights of a partition of `[a, b]` refined until `f`
/// is integrated to `spec`; the rule is then reused for integrands that
/// differ from `f` by a smooth factor.
pub fn adapted_rule<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    max_panels: usize,
) -> Result<Vec<(f64, f64)>, QuadError> {
    let mut panels = adapt_panels(&mut f, a, b, spec, max_panels)?;
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut rule = Vec::with_capacity(21 * panels.len());
    for p in &panels {
        let c = 0.5 * (p.a + p.b);
        let h = 0.5 * (p.b - p.a);
        rule.push((c, WGK[10] * h));
        for i in 0..10 {
            rule.push((c - h * XGK[i], WGK[i] * h));
            rule.push((c + h * XGK[i], WGK[i] * h));
        }
    }
    Ok(rule)
}

/// Number of geometric panels used towards a logarithmic endpoint.
const LOG_PANELS: i32 = 52;

/// Integral over `s ∈ [0, 1]` of `g(s)` whose only possible singularity sits at
/// `s = 0` and is of the given kind.
fn unit_with_start<F: FnMut(f64) -> C64>(mut g: F, kind: Singularity, spec: &QuadratureSpec) -> Result<(C64, f64), QuadError> {
    match kind {
        Singularity::None => adapt_real(g, 0.0, 1.0, spec),
        Singularity::InvSqrt => adapt_real(|u| g(u * u) * (2.0 * u), 0.0, 1.0, spec),
        Singularity::Logarithmic => {
            // panels [2^{-j-1}, 2^{-j}]; the remainder below 2^{-52} is dropped
            let mut total = C64::new(0.0, 0.0);
            let mut err = 0.0;
            let local = QuadratureSpec { rel_tol: spec.rel_tol, abs_tol: spec.abs_tol / LOG_PANELS as f64, ..*spec };
            for j in 0..LOG_PANELS {
                let hi = 0.5f64.powi(j);
                let lo = 0.5 * hi;
                let (v, e) = adapt_real(&mut g, lo, hi, &local)?;
                total += v;
                err += e;
            }
            Ok((total, err))
        }
    }
}

/// Integral of `f(z) dz` along a straight segment.
pub fn integrate_segment<F: FnMut(C64) -> C64>(mut f: F, seg: &PathSegment, spec: &QuadratureSpec) -> Result<(C64, f64), QuadError> {
    segment_dyn(&mut f, seg, spec)
}

fn segment_dyn(f: &mut dyn FnMut(C64) -> C64, seg: &PathSegment, spec: &QuadratureSpec) -> Result<(C64, f64), QuadError> {
    let d = seg.end - seg.start;
    let both = seg.start_singularity != Singularity::None && seg.end_singularity != Singularity::None;
    if both {
        let mid = seg.point(0.5);
        let half = QuadratureSpec { abs_tol: 0.5 * spec.abs_tol, ..*spec };
        let first = PathSegment::new(seg.start, mid).with_singularities(seg.start_singularity, Singularity::None);
        let second = PathSegment::new(mid, seg.end).with_singularities(Singularity::None, seg.end_singularity);
        let (v1, e1) = segment_dyn(f, &first, &half)?;
        let (v2, e2) = segment_dyn(f, &second, &half)?;
        return Ok((v1 + v2, e1 + e2));
    }
    let start = seg.start;
    if seg.end_singularity != Singularity::None {
        return unit_with_start(|s| f(start + d * (1.0 - s)) * d, seg.end_singularity, spec);
    }
    unit_with_start(|s| f(start + d * s) * d, seg.start_singularity, spec)
}

/// Integral along every segment of a contour, summed in order.
pub fn integrate_contour<F: FnMut(C64) -> C64>(mut f: F, contour: &Contour, spec: &QuadratureSpec) -> Result<(C64, f64), QuadError> {
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    for seg in contour.segments() {
        let (v, e) = integrate_segment(&mut f, seg, spec)?;
        total += v;
        err += e;
    }
    Ok((total, err))
}

const RAY_PANELS: usize = 120;

/// Integral of `f(z) dz` over `z = origin + s·direction`, `s ∈ [0, ∞)`, by
/// dyadic panels `[2^j, 2^{j+1}]` after an initial `[0, 1]`.
pub fn integrate_ray<F: FnMut(C64) -> C64>(mut f: F, origin: C64, direction: C64, spec: &QuadratureSpec) -> Result<(C64, f64), QuadError> {
    integrate_ray_from(&mut f, origin, direction, Singularity::None, spec)
}

/// As [`integrate_ray`] with an annotated singularity at the origin.
pub fn integrate_ray_from<F: FnMut(C64) -> C64>(
    mut f: F,
    origin: C64,
    direction: C64,
    origin_singularity: Singularity,
    spec: &QuadratureSpec,
) -> Result<(C64, f64), QuadError> {
    let dir = direction / direction.norm();
    let first = PathSegment::new(origin, origin + dir).with_singularities(origin_singularity, Singularity::None);
    let (mut total, mut err) = integrate_segment(&mut f, &first, spec)?;
    let mut lo = 1.0;
    for _ in 0..RAY_PANELS {
        let hi = 2.0 * lo;
        // later panels only need accuracy relative to what has accumulated
        let local = QuadratureSpec { abs_tol: spec.abs_tol.max(spec.rel_tol * total.norm()), ..*spec };
        let (v, e) = adapt_real(|s| f(origin + dir * s) * dir, lo, hi, &local)?;
        total += v;
        err += e;
        lo = hi;
        if v.norm() <= spec.tail_cutoff * total.norm() || (v.norm() == 0.0 && total.norm() == 0.0) {
            return Ok((total, err));
        }
    }
    Err(QuadError::Divergence { panels: RAY_PANELS })
}

/// Brent's method on a sign-changing bracket.
pub fn brent_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, QuadError> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(QuadError::Bracket { lo, hi, flo: fa, fhi: fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Ok(b)
}

/// Largest phase increment accepted between neighbouring samples.
pub const MAX_PHASE_STEP: f64 = 0.9 * PI;

/// Logarithms of nonvanishing samples with the imaginary part continued from
/// the principal value of the first sample.
pub fn unwrap_log(values: &[C64]) -> Result<Vec<C64>, QuadError> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev_phase = 0.0;
    for (i, v) in values.iter().enumerate() {
        let raw = v.arg();
        let phase = if i == 0 {
            raw
        } else {
            let step = (raw - prev_phase + PI).rem_euclid(2.0 * PI) - PI;
            if step.abs() > MAX_PHASE_STEP {
                return Err(QuadError::Resolution(i - 1, i));
            }
            prev_phase + step
        };
        out.push(C64::new(v.norm().ln(), phase));
        prev_phase = phase;
    }
    Ok(out)
}

/// Continuous logarithm of an analytic nonvanishing function along a segment:
/// a reference phase is tracked on `n` sample points and each query picks the
/// branch nearest the interpolated reference.
#[derive(Clone, Debug)]
pub struct ContinuousLog {
    seg: PathSegment,
    phases: Vec<f64>,
}

impl ContinuousLog {
    pub fn along<F: FnMut(C64) -> C64>(mut f: F, seg: PathSegment, n: usize) -> Result<Self, QuadError> {
        let mut n = n.max(8);
        loop {
            let samples: Vec<C64> = (0..=n).map(|i| f(seg.point(i as f64 / n as f64))).collect();
            match unwrap_log(&samples) {
                Ok(logs) => {
                    return Ok(ContinuousLog { seg, phases: logs.iter().map(|l| l.im).collect() });
                }
                Err(e) if n >= 1 << 16 => return Err(e),
                Err(_) => n *= 4,
            }
        }
    }

    /// Branch of `ln value` continuous along the segment at parameter `s`.
    pub fn log_at(&self, s: f64, value: C64) -> C64 {
        let n = self.phases.len() - 1;
        let x = (s.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(1));
        let t = x - i as f64;
        let reference = self.phases[i] * (1.0 - t) + self.phases[(i + 1).min(n)] * t;
        let raw = value.arg();
        let shift = ((reference - raw) / (2.0 * PI)).round();
        C64::new(value.norm().ln(), raw + 2.0 * PI * shift)
    }

    /// Parameter of the point nearest to `z` on the segment.
    pub fn parameter(&self, z: C64) -> f64 {
        let d = self.seg.end - self.seg.start;
        (((z - self.seg.start) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_on_unit_interval() {
        let seg = PathSegment::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        let (v, _) = integrate_segment(|z| z * z, &seg, &QuadratureSpec::default()).unwrap();
        assert!((v - 1.0 / 3.0).norm() < 1e-15);
    }

    #[test]
    fn brent_requires_bracket() {
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn unwrap_constant_positive() {
        let logs = unwrap_log(&[C64::new(2.0, 0.0); 5]).unwrap();
        assert!(logs.iter().all(|l| l.im == 0.0));
    }
}
