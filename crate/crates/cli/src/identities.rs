use crate::error::CliError;
use nzbc_core::branchfn::{self, Background, LimitSide};
use nzbc_core::elliptic::{theta_j, theta_j_prime, ThetaContext};
use nzbc_core::ellipticwave::{EllipticGeometry, EllipticParams};
use nzbc_core::planewave::{region_boundary, stationary_points, PlaneWaveParams};
use nzbc_core::quad::QuadratureSpec;
use nzbc_core::scattering::{scattering_matrix, InitialDatum, OdeTolerance};
use nzbc_core::C64;
use serde_json::{json, Value};
use std::f64::consts::PI;

/// One invariant with its measured residual.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub name: &'static str,
    pub xi: Option<f64>,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    /// The two sides of a cross-check, when they are worth reporting.
    pub values: Option<(C64, C64)>,
}

impl Record {
    fn new(name: &'static str, xi: Option<f64>, residual: f64, threshold: f64) -> Self {
        Record { name, xi, residual, threshold, pass: residual < threshold, values: None }
    }

    fn compare(name: &'static str, xi: Option<f64>, lhs: C64, rhs: C64, threshold: f64) -> Self {
        let mut r = Record::new(name, xi, rel(lhs, rhs), threshold);
        r.values = Some((lhs, rhs));
        r
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "name": self.name,
            "xi": self.xi,
            "residual": self.residual,
            "threshold": self.threshold,
            "pass": self.pass,
        });
        if let Some((a, b)) = self.values {
            v["lhs"] = json!({ "re": a.re, "im": a.im });
            v["rhs"] = json!({ "re": b.re, "im": b.im });
        }
        v
    }
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn theta(j: u8, z: C64, ctx: &ThetaContext) -> Result<C64, CliError> {
    Ok(theta_j(j, z, ctx).map_err(nzbc_core::Error::from)?)
}

/// Theta-function and normalisation identities of the genus-one geometry
/// at `-|ξ|`.
pub fn elliptic_suite(xi: f64, bg: &Background, threshold: f64, spec: &QuadratureSpec) -> Result<Vec<Record>, CliError> {
    let side_bg = if xi < 0.0 { *bg } else { bg.mirrored() };
    let geo = EllipticGeometry::new(-xi.abs(), &side_bg)?;
    let ctx = geo.theta_context().ok_or_else(|| CliError::Config(format!("ξ = {xi} has a degenerate nome")))?;
    let at = Some(xi);
    let q0 = geo.q0;
    let (m, k) = (geo.m.value(), geo.k_val);
    let mp = (1.0 - m * m).sqrt();
    let zero = C64::new(0.0, 0.0);
    let t = |j: u8, z: C64| theta(j, z, ctx);
    let re = |v: f64| C64::new(v, 0.0);
    let mut out = vec![
        Record::compare("theta2^2(0) = 2mK/pi", at, t(2, zero)?.powi(2), re(2.0 * m * k / PI), threshold),
        Record::compare("theta3^2(0) = 2K/pi", at, t(3, zero)?.powi(2), re(2.0 * k / PI), threshold),
        Record::compare("theta4^2(0) = 2m'K/pi", at, t(4, zero)?.powi(2), re(2.0 * mp * k / PI), threshold),
        Record::compare(
            "theta1'(0) = theta2 theta3 theta4(0)",
            at,
            theta_j_prime(1, zero, ctx).map_err(nzbc_core::Error::from)?,
            t(2, zero)? * t(3, zero)? * t(4, zero)?,
            threshold,
        ),
    ];
    let y = PI * geo.v_infinity(spec)?;
    let (t1, t2, t3, t4) = (t(1, y)?, t(2, y)?, t(3, y)?, t(4, y)?);
    let prod0 = t(2, zero)? * t(3, zero)? * t(4, zero)?;
    out.push(Record::compare("duplication theta1(2y)", at, t(1, 2.0 * y)? * prod0, 2.0 * t1 * t2 * t3 * t4, threshold));
    out.push(Record::compare("duplication theta4(2y)", at, t(4, 2.0 * y)? * t(4, zero)?.powi(3), t3.powi(4) - t2.powi(4), threshold));
    let a = geo.alpha;
    let iq = C64::new(0.0, q0);
    let s2 = (a + iq).norm_sqr();
    out.push(Record::compare("theta4^2/theta2^2 at pi v_inf", at, (t4 / t2).powi(2), -2.0 * iq * (iq + a.conj()) / (m * mp * s2), threshold));
    out.push(Record::compare("theta1^2/theta2^2 at pi v_inf", at, (t1 / t2).powi(2), -(iq + a) * (iq + a.conj()) / (mp * s2), threshold));
    out.push(Record::compare("theta3^2/theta2^2 at pi v_inf", at, (t3 / t2).powi(2), -2.0 * iq * (iq + a) / (m * s2), threshold));
    out.push(Record::compare(
        "theta1^2/theta4^2 at 2 pi v_inf",
        at,
        (t(1, 2.0 * y)? / t(4, 2.0 * y)?).powi(2),
        re(4.0 * q0 * a.im / (m * (q0 + a.im).powi(2))),
        threshold,
    ));
    out.push(Record::compare("C quadrature vs closed form", at, geo.c_quadrature(spec)?, geo.c_norm, threshold));
    let tau = geo.tau_from_cycles(spec)?;
    let mut tau_rec = Record::compare("tau from cycles", at, tau, geo.tau, threshold);
    tau_rec.residual = (tau - geo.tau).norm();
    tau_rec.pass = tau_rec.residual < threshold;
    out.push(tau_rec);
    out.push(Record::compare("Omega contour vs closed form", at, -geo.omega_big_contour(spec)?, re(geo.omega_big), threshold));
    out.push(Record::new("Im h(alpha)", at, geo.h_residual_at_alpha(spec)?, 1e-7));
    Ok(out)
}

/// Identities that need only the background.
pub fn background_suite(bg: &Background, threshold: f64) -> Result<Vec<Record>, CliError> {
    let q0 = bg.q0();
    let b = region_boundary(bg);
    let lambda_defect = [C64::new(0.7, 0.3), C64::new(-1.2, -0.4), C64::new(0.1, 2.0), C64::new(3.0, 0.0), C64::new(-2.0, 0.0)]
        .iter()
        .map(|&k| {
            let l = branchfn::lambda(k, bg, LimitSide::Right);
            (l * l - (k * k + q0 * q0)).norm() / (k * k + q0 * q0).norm()
        })
        .fold(0.0, f64::max);
    let xi = -1.5 * b;
    let (k1, k2) = stationary_points(xi, bg).map_err(nzbc_core::Error::from)?;
    let near = EllipticGeometry::new(-b * (1.0 - 1e-10), bg)?;
    let omega_limit = -6.0 * 3f64.sqrt() * q0 * q0;
    let mut limit = Record::compare("Omega boundary limit", Some(-b), C64::new(near.omega_big, 0.0), C64::new(omega_limit, 0.0), 1e-5);
    limit.residual = (near.omega_big - omega_limit).abs();
    limit.pass = limit.residual < limit.threshold;
    Ok(vec![
        Record::new("lambda^2 = k^2 + q0^2", None, lambda_defect, threshold),
        Record::new("k1 + k2 = xi/4", Some(xi), (k1 + k2 - xi / 4.0).abs(), threshold),
        Record::new("k1 k2 = q0^2/2", Some(xi), (k1 * k2 - 0.5 * q0 * q0).abs(), threshold),
        limit,
    ])
}

/// Unitarity and unit determinant of the scattering matrix on the real line.
pub fn scattering_suite(datum: &InitialDatum, threshold: f64) -> Result<Vec<Record>, CliError> {
    let tol = OdeTolerance::default();
    let mut unitarity: f64 = 0.0;
    let mut det: f64 = 0.0;
    for j in 0..21 {
        let k = C64::new(-3.0 + 0.3 * j as f64 + 0.01, 0.0);
        let s = scattering_matrix(datum, k, LimitSide::Right, &tol)?;
        unitarity = unitarity.max((s.get(0, 0).norm_sqr() + s.get(1, 0).norm_sqr() - 1.0).abs());
        det = det.max((s.det() - 1.0).norm());
    }
    Ok(vec![Record::new("unitarity |a|^2 + |b|^2 = 1", None, unitarity, threshold), Record::new("det S = 1", None, det, threshold)])
}

/// Imaginary residues of the real constants of both regions.
pub fn reflection_suite(xi: f64, datum: &InitialDatum, threshold: f64, spec: &QuadratureSpec) -> Result<Vec<Record>, CliError> {
    let p = EllipticParams::for_datum(xi, datum, spec)?;
    let far = -1.5 * region_boundary(&datum.background());
    let pw = PlaneWaveParams::for_datum(far, datum, spec)?;
    Ok(vec![
        Record::new("Im omega", Some(xi), p.omega_residue, threshold),
        Record::new("Im g_inf (elliptic)", Some(xi), p.g_inf_residue, threshold),
        Record::new("Im H0", Some(xi), p.h0_residue, threshold),
        Record::new("Im g_inf (plane wave)", Some(far), pw.g_inf_residue, threshold),
    ])
}
