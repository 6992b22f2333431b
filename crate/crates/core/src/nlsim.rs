//! Split-step Fourier integrator for `iq_t + q_xx + 2(|q|² - q0²)q = 0` on a
//! periodic grid, and comparison of its snapshots with the long-time
//! profiles.
//!
//! Only equal boundary values `q₋ = q₊` fit a periodic box. The linear step
//! is exact in Fourier space; the nonlinear step is an exact phase rotation,
//! so each Strang step is unitary and exactly reversible.

use crate::branchfn::Background;
use crate::ellipticwave::{self, reflection_constants, EllipticGeometry, JumpContours};
use crate::error::{Error, Result, SimError};
use crate::planewave::region_boundary;
use crate::quad::QuadratureSpec;
use crate::scattering::{InitialDatum, ReflectionData};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

pub const MIN_POINTS: usize = 1 << 10;
/// Width of each edge band as a fraction of the domain.
pub const EDGE_FRACTION: f64 = 0.05;
/// Default time step as a multiple of `Δx²`.
pub const DEFAULT_DT_FACTOR: f64 = 0.25;
/// Largest accepted time step as a multiple of `Δx²`.
pub const DT_BOUND_FACTOR: f64 = 0.5;
/// Tolerance on the datum matching the background near the edges.
pub const DATUM_EDGE_TOL: f64 = 1e-12;
/// Default bound on the edge deviation of the snapshots.
pub const DEFAULT_EDGE_TOL: f64 = 1e-8;

/// Which equation the integrator advances.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// `q` itself, with the background frequency removed.
    Background,
    /// `u = q e^{2iq0²t}`, solving `iu_t + u_xx + 2|u|²u = 0`; snapshots are
    /// mapped back to `q`.
    Standard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub domain_halfwidth: f64,
    pub n_points: usize,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_times: Vec<f64>,
    /// Largest accepted deviation from the background inside the edge
    /// bands; `None` records the deviation without enforcing it.
    pub edge_tol: Option<f64>,
}

impl SimulationConfig {
    /// Configuration with `dt = 0.25Δx²`, ending at the last snapshot.
    pub fn new(domain_halfwidth: f64, n_points: usize, snapshot_times: Vec<f64>) -> Self {
        let dx = 2.0 * domain_halfwidth / n_points as f64;
        let t_final = snapshot_times.iter().copied().fold(0.0, f64::max);
        SimulationConfig {
            domain_halfwidth,
            n_points,
            dt: DEFAULT_DT_FACTOR * dx * dx,
            t_final,
            snapshot_times,
            edge_tol: Some(DEFAULT_EDGE_TOL),
        }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.domain_halfwidth / self.n_points as f64
    }

    /// Grid points `-L + jΔx`, `j = 0..n`.
    pub fn grid(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_points).map(|j| -self.domain_halfwidth + dx * j as f64).collect()
    }

    pub fn validate(&self) -> std::result::Result<(), SimError> {
        let config = |msg: String| Err(SimError::Config(msg));
        if !(self.domain_halfwidth > 0.0 && self.domain_halfwidth.is_finite()) {
            return config(format!("domain half-width {} must be positive", self.domain_halfwidth));
        }
        if !self.n_points.is_power_of_two() || self.n_points < MIN_POINTS {
            return config(format!("n_points = {} must be a power of two ≥ {MIN_POINTS}", self.n_points));
        }
        let dx = self.dx();
        let bound = DT_BOUND_FACTOR * dx * dx;
        if !(self.dt > 0.0) {
            return config(format!("time step {} must be positive", self.dt));
        }
        if self.dt > bound {
            return Err(SimError::TimeStep { dt: self.dt, bound });
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return config(format!("final time {} must be positive", self.t_final));
        }
        if self.snapshot_times.is_empty() {
            return config("no snapshot times".into());
        }
        if self.snapshot_times.windows(2).any(|w| !(w[1] > w[0])) {
            return config("snapshot times must be strictly increasing".into());
        }
        let (first, last) = (self.snapshot_times[0], self.snapshot_times[self.snapshot_times.len() - 1]);
        if first < 0.0 || last > self.t_final * (1.0 + 1e-12) {
            return config(format!("snapshot times must lie in [0, {}]", self.t_final));
        }
        Ok(())
    }
}

/// Field samples on a uniform grid at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<C64>,
    pub time: f64,
    /// Largest `|q - q₋|` inside the two edge bands.
    pub edge_deviation: f64,
}

impl GridField {
    pub fn x(&self, j: usize) -> f64 {
        self.x0 + self.dx * j as f64
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, C64)> + '_ {
        self.values.iter().enumerate().map(|(j, &v)| (self.x(j), v))
    }

    /// `∫ (|q|² - q0²) dx` by the trapezoid rule on the periodic grid.
    pub fn mass_proxy(&self, q0: f64) -> f64 {
        self.values.iter().map(|v| v.norm_sqr() - q0 * q0).sum::<f64>() * self.dx
    }

    /// Smallest and largest `|q|` over `|x - center| ≤ half_width`.
    pub fn local_extrema(&self, center: f64, half_width: f64) -> Option<(f64, f64)> {
        self.points()
            .filter(|(x, _)| (x - center).abs() <= half_width)
            .map(|(_, v)| v.norm())
            .fold(None, |acc, a| match acc {
                None => Some((a, a)),
                Some((lo, hi)) => Some((lo.min(a), hi.max(a))),
            })
    }
}

/// One Strang step: half nonlinear rotation, exact linear propagation,
/// half nonlinear rotation.
pub struct SplitStep {
    shift: f64,
    kappa2: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
    propagator: Option<(f64, Vec<C64>)>,
}

impl SplitStep {
    pub fn new(n: usize, dx: f64, q0: f64, gauge: Gauge) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch = vec![C64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        let length = n as f64 * dx;
        let kappa2 = (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                (2.0 * PI * m / length).powi(2)
            })
            .collect();
        let shift = match gauge {
            Gauge::Background => q0 * q0,
            Gauge::Standard => 0.0,
        };
        SplitStep { shift, kappa2, forward, inverse, scratch, propagator: None }
    }

    fn rotate(&self, q: &mut [C64], h: f64) {
        for v in q.iter_mut() {
            let phase = 2.0 * (v.norm_sqr() - self.shift) * h;
            *v *= C64::from_polar(1.0, phase);
        }
    }

    /// Advance `q` by `dt` (negative steps run backwards).
    pub fn step(&mut self, q: &mut [C64], dt: f64) {
        if self.propagator.as_ref().is_none_or(|(h, _)| *h != dt) {
            let n = self.kappa2.len() as f64;
            let p = self.kappa2.iter().map(|k2| C64::from_polar(1.0 / n, -k2 * dt)).collect();
            self.propagator = Some((dt, p));
        }
        self.rotate(q, 0.5 * dt);
        self.forward.process_with_scratch(q, &mut self.scratch);
        if let Some((_, p)) = &self.propagator {
            for (v, m) in q.iter_mut().zip(p) {
                *v *= m;
            }
        }
        self.inverse.process_with_scratch(q, &mut self.scratch);
        self.rotate(q, 0.5 * dt);
    }
}

fn edge_band(n: usize) -> usize {
    ((EDGE_FRACTION * n as f64).ceil() as usize).max(1)
}

/// Largest `|q - q_bg|` inside the edge bands, and the outermost `|x|` where
/// the deviation exceeds `tol`.
fn edge_deviation(x: &[f64], q: &[C64], bg: C64, tol: f64) -> (f64, f64) {
    let band = edge_band(q.len());
    let n = q.len();
    let deviation = q[..band].iter().chain(&q[n - band..]).map(|v| (v - bg).norm()).fold(0.0, f64::max);
    let reach = x.iter().zip(q).filter(|(_, v)| (*v - bg).norm() > tol).map(|(x, _)| x.abs()).fold(0.0, f64::max);
    (deviation, reach)
}

/// Evolve `datum` in the background frame; see [`evolve_in`].
pub fn evolve(datum: &InitialDatum, cfg: &SimulationConfig) -> Result<Vec<GridField>> {
    evolve_in(datum, cfg, Gauge::Background)
}

/// Evolve `datum` and return `q` at each snapshot time.
pub fn evolve_in(datum: &InitialDatum, cfg: &SimulationConfig, gauge: Gauge) -> Result<Vec<GridField>> {
    cfg.validate()?;
    let bg = datum.background();
    let q_bg = bg.q_minus();
    if (bg.q_plus() - q_bg).norm() > DATUM_EDGE_TOL * bg.q0() {
        return Err(SimError::Config(format!("periodic grid needs q₋ = q₊ (got {} and {})", q_bg, bg.q_plus())).into());
    }
    let x = cfg.grid();
    let mut q: Vec<C64> = x.iter().map(|&x| datum.value_at(x)).collect();
    let band = edge_band(q.len());
    let n = q.len();
    if let Some(bad) = q[..band].iter().chain(&q[n - band..]).find(|v| (*v - q_bg).norm() > DATUM_EDGE_TOL) {
        return Err(SimError::Config(format!("datum value {bad} differs from the background inside the edge bands")).into());
    }
    let q0 = bg.q0();
    let mut stepper = SplitStep::new(n, cfg.dx(), q0, gauge);
    let tol = cfg.edge_tol.unwrap_or(DEFAULT_EDGE_TOL);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(cfg.snapshot_times.len());
    for &target in &cfg.snapshot_times {
        if target > t {
            let steps = ((target - t) / cfg.dt).ceil().max(1.0) as usize;
            let h = (target - t) / steps as f64;
            for _ in 0..steps {
                stepper.step(&mut q, h);
            }
            t = target;
        }
        let values: Vec<C64> = match gauge {
            Gauge::Background => q.clone(),
            Gauge::Standard => {
                let back = C64::from_polar(1.0, -2.0 * q0 * q0 * t);
                q.iter().map(|v| v * back).collect()
            }
        };
        let (deviation, reach) = edge_deviation(&x, &values, q_bg, tol);
        if let Some(limit) = cfg.edge_tol {
            if deviation > limit {
                let front_speed = if t > 0.0 { reach / t } else { f64::INFINITY };
                return Err(SimError::DomainTooSmall { time: t, deviation, front_speed }.into());
            }
        }
        out.push(GridField { x0: x[0], dx: cfg.dx(), values, time: t, edge_deviation: deviation });
    }
    Ok(out)
}

/// Modulus error of one snapshot on the masked points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotError {
    pub time: f64,
    pub sup: f64,
    pub l2: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub snapshots: Vec<SnapshotError>,
    /// Least-squares slope of `ln sup` against `ln t`; absent with fewer
    /// than two snapshots or a vanishing error.
    pub exponent: Option<f64>,
}

impl ErrorReport {
    pub fn decreasing(&self) -> bool {
        self.snapshots.windows(2).all(|w| w[1].sup < w[0].sup)
    }
}

/// Slope of the least-squares line through `(ln t, ln e)`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(t, e)| !(t > 0.0 && e > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(t, e)| (t.ln(), e.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Compare `|q|` of each snapshot with `modulus(x, t)` where `mask(x, t)`
/// holds.
pub fn compare_to_asymptotics<E, M>(snapshots: &[GridField], mut modulus: E, mask: M) -> Result<ErrorReport>
where
    E: FnMut(f64, f64) -> Result<f64>,
    M: Fn(f64, f64) -> bool,
{
    let mut rows = Vec::with_capacity(snapshots.len());
    for snap in snapshots {
        let t = snap.time;
        let (mut sup, mut sq, mut points) = (0.0f64, 0.0f64, 0usize);
        for (x, v) in snap.points() {
            if !mask(x, t) {
                continue;
            }
            let e = (v.norm() - modulus(x, t)?).abs();
            sup = sup.max(e);
            sq += e * e;
            points += 1;
        }
        if points == 0 {
            return Err(SimError::EmptyMask.into());
        }
        rows.push(SnapshotError { time: t, sup, l2: (sq * snap.dx).sqrt(), points });
    }
    let exponent = fit_exponent(&rows.iter().map(|r| (r.time, r.sup)).collect::<Vec<_>>());
    Ok(ErrorReport { snapshots: rows, exponent })
}

/// `ω(ξ)` tabulated on `|ξ|` nodes of one side and interpolated linearly;
/// outside the node range the nearest value is used.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaTable {
    pub abs_xi: Vec<f64>,
    pub omega: Vec<f64>,
}

impl OmegaTable {
    /// Nodes `|ξ| ∈ [inner, outer]` with `ω` from the reflection coefficient
    /// of the problem solved on that side (`r` of the datum for `ξ < 0`, of
    /// the mirrored datum for `ξ > 0`).
    pub fn build(r: &ReflectionData, bg: &Background, nodes: &[f64], spec: &QuadratureSpec) -> Result<Self> {
        let omega = nodes
            .iter()
            .map(|&a| {
                let geo = EllipticGeometry::new(-a, bg)?;
                Ok(reflection_constants(&geo, r, &JumpContours::straight(&geo), spec)?.omega_small)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(OmegaTable { abs_xi: nodes.to_vec(), omega })
    }

    pub fn eval(&self, abs_xi: f64) -> f64 {
        let n = self.abs_xi.len();
        if abs_xi <= self.abs_xi[0] {
            return self.omega[0];
        }
        if abs_xi >= self.abs_xi[n - 1] {
            return self.omega[n - 1];
        }
        let j = self.abs_xi.partition_point(|&a| a <= abs_xi) - 1;
        let s = (abs_xi - self.abs_xi[j]) / (self.abs_xi[j + 1] - self.abs_xi[j]);
        self.omega[j] * (1.0 - s) + self.omega[j + 1] * s
    }
}

/// Points compared with the asymptotic profile: elliptic points with
/// `inner ≤ |ξ| ≤ (1 - margin)ξ_b` and plane-wave points with
/// `(1 + margin)ξ_b ≤ |ξ| ≤ outer`, where `ξ_b = 4√2 q0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionMask {
    pub boundary: f64,
    pub inner: f64,
    pub margin: f64,
    pub outer: f64,
}

impl RegionMask {
    /// `inner = 0.2q0`, `margin = 5%`, `outer = 2ξ_b`.
    pub fn standard(bg: &Background) -> Self {
        let boundary = region_boundary(bg);
        RegionMask { boundary, inner: 0.2 * bg.q0(), margin: 0.05, outer: 2.0 * boundary }
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        if !(t > 0.0) {
            return false;
        }
        let a = (x / t).abs();
        let b = self.boundary;
        (a >= self.inner && a <= (1.0 - self.margin) * b) || (a >= (1.0 + self.margin) * b && a <= self.outer)
    }
}

/// Leading-order `|q(x, t)|` on both regions: `q0` in the plane-wave
/// regions and the `sn` envelope with interpolated `ω` in between.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulusProfile {
    background: Background,
    /// `None` for a datum equal to its background.
    tables: Option<(OmegaTable, OmegaTable)>,
}

impl ModulusProfile {
    /// Tabulate `ω` at `nodes` equispaced values of `|ξ|` in
    /// `[inner, (1 - margin/2)ξ_b]` on each side. For a datum equal to its
    /// own mirror image the left table is reused.
    pub fn build(datum: &InitialDatum, mask: &RegionMask, nodes: usize, spec: &QuadratureSpec) -> Result<Self> {
        let background = datum.background();
        if datum.is_background() {
            return Ok(ModulusProfile { background, tables: None });
        }
        let nodes = nodes.max(2);
        let hi = (1.0 - 0.5 * mask.margin) * mask.boundary;
        let grid: Vec<f64> = (0..nodes).map(|j| mask.inner + (hi - mask.inner) * j as f64 / (nodes - 1) as f64).collect();
        let left = OmegaTable::build(&ReflectionData::for_datum(datum), &background, &grid, spec)?;
        let mirror = datum.mirrored();
        let right = if mirror == *datum {
            left.clone()
        } else {
            OmegaTable::build(&ReflectionData::for_datum(&mirror), &mirror.background(), &grid, spec)?
        };
        Ok(ModulusProfile { background, tables: Some((left, right)) })
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn tables(&self) -> Option<&(OmegaTable, OmegaTable)> {
        self.tables.as_ref()
    }

    /// Predicted `|q(x, t)|`.
    pub fn modulus(&self, x: f64, t: f64) -> Result<f64> {
        let q0 = self.background.q0();
        let Some((left, right)) = &self.tables else {
            return Ok(q0);
        };
        let xi = x / t;
        if xi.abs() >= region_boundary(&self.background) {
            return Ok(q0);
        }
        let (table, bg, x_local) = if xi < 0.0 {
            (left, self.background, x)
        } else {
            (right, self.background.mirrored(), -x)
        };
        let geo = EllipticGeometry::new(-xi.abs(), &bg)?;
        let offset = ellipticwave::x_offset(table.eval(xi.abs()), &bg);
        Ok(ellipticwave::modulus_sq_sn(&geo, x_local, t, offset)?.max(0.0).sqrt())
    }
}

/// Envelope extrema of one snapshot near `x = ξt` against
/// `q0 + α_im` and `|q0 - α_im|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeCheck {
    pub xi: f64,
    pub measured_max: f64,
    pub measured_min: f64,
    pub predicted_max: f64,
    pub predicted_min: f64,
    /// Largest of the two deviations divided by `q0 + α_im`.
    pub relative_error: f64,
}

/// Compare the extrema of `|q|` over one envelope period centred on
/// `x = ξt` with the bounds of the `sn` envelope at `ξ`.
pub fn envelope_check(field: &GridField, xi: f64, bg: &Background) -> Result<EnvelopeCheck> {
    let side_bg = if xi < 0.0 { *bg } else { bg.mirrored() };
    let geo = EllipticGeometry::new(-xi.abs(), &side_bg)?;
    let (lo, hi) = ellipticwave::envelope_bounds(&geo);
    // |q|² has period 2K in the sn argument |α + iq0| x
    let period = 2.0 * geo.k_val / (geo.alpha + C64::new(0.0, geo.q0)).norm();
    let (measured_min, measured_max) = field
        .local_extrema(xi * field.time, 0.5 * period)
        .ok_or_else(|| Error::from(SimError::EmptyMask))?;
    let relative_error = (measured_max - hi).abs().max((measured_min - lo).abs()) / hi;
    Ok(EnvelopeCheck { xi, measured_max, measured_min, predicted_max: hi, predicted_min: lo, relative_error })
}

/// Outcome of a simulation compared with the leading-order profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub errors: ErrorReport,
    /// Envelope checks on the last snapshot.
    pub envelopes: Vec<EnvelopeCheck>,
    /// Largest edge deviation over all snapshots.
    pub edge_deviation: f64,
}

impl ValidationReport {
    pub fn worst_envelope(&self) -> f64 {
        self.envelopes.iter().map(|e| e.relative_error).fold(0.0, f64::max)
    }
}

/// Evolve `datum`, compare `|q|` with [`ModulusProfile`] on `mask`, and
/// check the envelope extrema of the last snapshot at `envelope_xi`.
pub fn validate(
    datum: &InitialDatum,
    cfg: &SimulationConfig,
    mask: &RegionMask,
    omega_nodes: usize,
    envelope_xi: &[f64],
    spec: &QuadratureSpec,
) -> Result<ValidationReport> {
    let profile = ModulusProfile::build(datum, mask, omega_nodes, spec)?;
    let snapshots = evolve(datum, cfg)?;
    let errors = compare_to_asymptotics(&snapshots, |x, t| profile.modulus(x, t), |x, t| mask.contains(x, t))?;
    let bg = datum.background();
    let envelopes = match snapshots.last() {
        Some(last) => envelope_xi.iter().map(|&xi| envelope_check(last, xi, &bg)).collect::<Result<Vec<_>>>()?,
        None => Vec::new(),
    };
    let edge_deviation = snapshots.iter().map(|s| s.edge_deviation).fold(0.0, f64::max);
    Ok(ValidationReport { errors, envelopes, edge_deviation })
}
