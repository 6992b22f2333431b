use crate::config::{default_envelope_xi, default_identity_xi, RunConfig};
use crate::error::{CliError, ExitStatus};
use crate::identities;
use crate::output::{csv_row, json_complex};
use nzbc_core::branchfn::{Background, LimitSide};
use nzbc_core::ellipticwave::{EllipticGeometry, EllipticParams};
use nzbc_core::nlsim::{self, RegionMask, SimulationConfig};
use nzbc_core::planewave::{self, region_boundary, PlaneWaveParams};
use nzbc_core::quad::QuadratureSpec;
use nzbc_core::scattering::{scattering_matrix, InitialDatum, OdeTolerance, ReflectionData};
use nzbc_core::C64;
use rayon::prelude::*;
use serde_json::{json, Value};

/// Text produced by a verb together with its exit status.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub status: ExitStatus,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, status: ExitStatus::Ok }
    }
}

/// Relative distance from the region boundary treated as the boundary itself.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    PlaneWave,
    Boundary,
    Elliptic,
    Degenerate,
}

impl Region {
    pub fn of(xi: f64, bg: &Background) -> Self {
        let b = region_boundary(bg);
        if xi == 0.0 {
            Region::Degenerate
        } else if (xi.abs() - b).abs() <= BOUNDARY_TOL * b {
            Region::Boundary
        } else if xi.abs() > b {
            Region::PlaneWave
        } else {
            Region::Elliptic
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::PlaneWave => "plane-wave",
            Region::Boundary => "boundary",
            Region::Elliptic => "elliptic",
            Region::Degenerate => "degenerate",
        }
    }
}

fn side_name(xi: f64) -> &'static str {
    if xi < 0.0 {
        "left"
    } else {
        "right"
    }
}

pub fn cmd_params(cfg: &RunConfig, spec: &QuadratureSpec) -> Result<Outcome, CliError> {
    let datum = cfg.datum()?;
    if cfg.xi.is_empty() {
        return Err(CliError::Config("params needs a non-empty \"xi\" list".into()));
    }
    let records = cfg.xi.par_iter().map(|&xi| params_record(xi, &datum, spec)).collect::<Result<Vec<_>, _>>()?;
    Ok(Outcome::ok(pretty(&json!({ "records": records }))))
}

pub fn params_record(xi: f64, datum: &InitialDatum, spec: &QuadratureSpec) -> Result<Value, CliError> {
    let bg = datum.background();
    let q0 = bg.q0();
    let region = Region::of(xi, &bg);
    let base = json!({ "xi": xi, "q0": q0, "region": region.name(), "side": side_name(xi) });
    let extra = match region {
        Region::Degenerate => {
            let reason = match EllipticGeometry::new(xi, &bg) {
                Err(e) => e.to_string(),
                Ok(_) => "ξ = 0".to_string(),
            };
            json!({ "reason": reason })
        }
        Region::Boundary => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            json!({
                "k0": -q0 * s,
                "alpha": json_complex(C64::new(-q0 * s, 0.0)),
                "m": 0.0,
                "k1": -q0 * s,
                "k2": -q0 * s,
                "omega_big": -6.0 * 3f64.sqrt() * q0 * q0,
                "notice": "boundary: the band [ᾱ, α] closes at k0 and both profiles reduce to modulus q0",
            })
        }
        Region::PlaneWave => {
            let p = PlaneWaveParams::for_datum(xi, datum, spec)?;
            json!({ "k1": p.k1, "k2": p.k2, "g_inf": p.g_inf, "g_inf_residue": p.g_inf_residue })
        }
        Region::Elliptic => elliptic_record(xi, datum, spec)?,
    };
    Ok(merge(base, extra))
}

fn elliptic_record(xi: f64, datum: &InitialDatum, spec: &QuadratureSpec) -> Result<Value, CliError> {
    let bg = datum.background();
    let side_bg = if xi < 0.0 { bg } else { bg.mirrored() };
    let geo = EllipticGeometry::new(-xi.abs(), &side_bg)?;
    let h_residual = geo.h_residual_at_alpha(spec)?;
    let mut record = json!({
        "k0": geo.k0,
        "alpha": json_complex(geo.alpha),
        "m": geo.m.value(),
        "K": geo.k_val,
        "tau": json_complex(geo.tau),
        "c_norm": json_complex(geo.c_norm),
        "omega_big": geo.omega_big,
        "k_star": geo.k_star,
        "h_alpha_residual": h_residual,
    });
    if datum.is_background() {
        record["notice"] = json!("reflectionless datum: the solution stays on the background");
        return Ok(record);
    }
    let p = EllipticParams::for_datum(xi, datum, spec)?;
    Ok(merge(
        record,
        json!({
            "omega": p.omega_small,
            "omega_residue": p.omega_residue,
            "v_inf": json_complex(p.v_inf),
            "h0": p.h0,
            "h0_residue": p.h0_residue,
            "g_inf_big": p.g_inf_big,
            "g_inf": p.g_inf,
            "g_inf_residue": p.g_inf_residue,
            "x_offset": p.x_offset,
            "c_const": json_complex(p.c_const),
        }),
    ))
}

enum Profile {
    Constant(C64),
    PlaneWave(PlaneWaveParams),
    Elliptic(Box<EllipticParams>),
}

impl Profile {
    fn build(xi: f64, region: Region, datum: &InitialDatum, spec: &QuadratureSpec) -> Result<Self, CliError> {
        let bg = datum.background();
        let far = if xi < 0.0 { bg.q_minus() } else { bg.q_plus() };
        Ok(match region {
            Region::Degenerate => {
                return Err(CliError::Config("ξ = 0 is degenerate (m = 1); remove it from the grid".into()));
            }
            _ if datum.is_background() => Profile::Constant(far),
            Region::Boundary | Region::PlaneWave => Profile::PlaneWave(PlaneWaveParams::for_datum(xi, datum, spec)?),
            Region::Elliptic => Profile::Elliptic(Box::new(EllipticParams::for_datum(xi, datum, spec)?)),
        })
    }

    fn eval(&self, x: f64, t: f64, bg: &Background) -> Result<C64, CliError> {
        Ok(match self {
            Profile::Constant(q) => *q,
            Profile::PlaneWave(p) => planewave::q_asymp_pw(x, t, p, bg)?,
            Profile::Elliptic(p) => p.q_asymp(x, t)?,
        })
    }
}

pub fn cmd_asymp(cfg: &RunConfig, spec: &QuadratureSpec) -> Result<Outcome, CliError> {
    let datum = cfg.datum()?;
    let bg = datum.background();
    let grid = cfg.grid.as_ref().ok_or_else(|| CliError::Config("asymp needs a \"grid\" section".into()))?;
    let xis = grid.xi.values();
    let ts = grid.t.values();
    if xis.is_empty() || ts.is_empty() {
        return Err(CliError::Config("empty grid".into()));
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0)) {
        return Err(CliError::Config(format!("grid time {t} must be positive")));
    }
    let regions: Vec<Region> = xis.iter().map(|&xi| Region::of(xi, &bg)).collect();
    if !grid.region_column {
        let plane = |r: &Region| matches!(r, Region::PlaneWave | Region::Boundary);
        if regions.iter().any(plane) && regions.iter().any(|r| !plane(r)) {
            return Err(CliError::Config("grid straddles the region boundary; set \"region_column\": true".into()));
        }
    }
    let blocks = xis
        .par_iter()
        .zip(&regions)
        .map(|(&xi, &region)| {
            let profile = Profile::build(xi, region, &datum, spec)?;
            ts.iter()
                .map(|&t| {
                    let x = xi * t;
                    let q = profile.eval(x, t, &bg)?;
                    let mut row = csv_row(&[x, t, q.re, q.im, q.norm()]);
                    if grid.region_column {
                        row.push(',');
                        row.push_str(region.name());
                    }
                    Ok(row)
                })
                .collect::<Result<Vec<String>, CliError>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut out = String::from("x,t,re_q,im_q,abs_q");
    if grid.region_column {
        out.push_str(",region");
    }
    out.push('\n');
    for row in blocks.into_iter().flatten() {
        out.push_str(&row);
        out.push('\n');
    }
    Ok(Outcome::ok(out))
}

pub fn cmd_scatter(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let datum = cfg.datum()?;
    let grid = cfg.k_grid.ok_or_else(|| CliError::Config("scatter needs a \"k_grid\" section".into()))?;
    let r = ReflectionData::for_datum(&datum);
    let tol = OdeTolerance::default();
    let rows = grid
        .points()
        .par_iter()
        .map(|&k| {
            let s = scattering_matrix(&datum, k, LimitSide::Right, &tol)?;
            let (a, b, abar) = (s.get(0, 0), s.get(1, 0), s.get(1, 1));
            let rk = r.r(k, LimitSide::Right)?;
            let r_ode = -b / abar;
            Ok(csv_row(&[k.re, k.im, rk.re, rk.im, a.norm_sqr() + b.norm_sqr() - 1.0, r_ode.re, r_ode.im]))
        })
        .collect::<Result<Vec<String>, CliError>>()?;
    let mut out = String::from("re_k,im_k,re_r,im_r,unitarity_defect,re_r_ode,im_r_ode\n");
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    Ok(Outcome::ok(out))
}

pub fn cmd_validate(cfg: &RunConfig, spec: &QuadratureSpec) -> Result<Outcome, CliError> {
    let datum = cfg.datum()?;
    let bg = datum.background();
    let sim = cfg.simulation.as_ref().ok_or_else(|| CliError::Config("validate needs a \"simulation\" section".into()))?;
    let mut sc = SimulationConfig::new(sim.half_width, sim.n_points, sim.snapshots.clone());
    if let Some(dt) = sim.dt {
        sc.dt = dt;
    }
    sc.edge_tol = sim.edge_tol;
    let mask = RegionMask::standard(&bg);
    let background = datum.is_background();
    let envelope_xi = match (&sim.envelope_xi, background) {
        (_, true) => Vec::new(),
        (Some(v), false) => v.clone(),
        (None, false) => default_envelope_xi(&bg),
    };
    let report = nlsim::validate(&datum, &sc, &mask, sim.omega_nodes, &envelope_xi, spec)?;
    let errors = &report.errors;
    let mut criteria = Vec::new();
    if background {
        let worst = errors.snapshots.iter().map(|s| s.sup).fold(0.0, f64::max);
        criteria.push(json!({ "name": "background preserved", "value": worst, "threshold": 1e-10, "pass": worst <= 1e-10 }));
    } else {
        let [lo, hi] = sim.exponent_window;
        let exponent_pass = errors.exponent.is_some_and(|e| e >= lo && e <= hi);
        criteria.push(json!({ "name": "sup error decreasing", "pass": errors.decreasing() }));
        criteria.push(json!({ "name": "fitted exponent", "value": errors.exponent, "window": [lo, hi], "pass": exponent_pass }));
        let worst = report.worst_envelope();
        criteria.push(json!({ "name": "envelope extrema", "value": worst, "threshold": sim.envelope_tol, "pass": worst <= sim.envelope_tol }));
    }
    let pass = criteria.iter().all(|c| c["pass"] == json!(true));
    let doc = json!({
        "snapshots": errors.snapshots.iter().map(|s| json!({ "t": s.time, "sup": s.sup, "l2": s.l2, "points": s.points })).collect::<Vec<_>>(),
        "exponent": errors.exponent,
        "edge_deviation": report.edge_deviation,
        "envelopes": report.envelopes.iter().map(|e| json!({
            "xi": e.xi,
            "measured_max": e.measured_max,
            "measured_min": e.measured_min,
            "predicted_max": e.predicted_max,
            "predicted_min": e.predicted_min,
            "relative_error": e.relative_error,
        })).collect::<Vec<_>>(),
        "criteria": criteria,
        "pass": pass,
    });
    Ok(Outcome { text: pretty(&doc), status: if pass { ExitStatus::Ok } else { ExitStatus::Acceptance } })
}

pub fn cmd_identities(cfg: &RunConfig, spec: &QuadratureSpec) -> Result<Outcome, CliError> {
    let datum = cfg.datum()?;
    let bg = datum.background();
    let section = cfg.identities.clone().unwrap_or(crate::config::IdentitySection { xi: None, threshold: 1e-8, reflection: true });
    let xis = section.xi.clone().unwrap_or_else(|| default_identity_xi(&bg));
    let mut records: Vec<identities::Record> = xis
        .par_iter()
        .map(|&xi| identities::elliptic_suite(xi, &bg, section.threshold, spec))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    records.extend(identities::background_suite(&bg, section.threshold)?);
    records.extend(identities::scattering_suite(&datum, section.threshold)?);
    if section.reflection && !datum.is_background() {
        if let Some(&xi) = xis.first() {
            records.extend(identities::reflection_suite(xi, &datum, section.threshold, spec)?);
        }
    }
    let pass = records.iter().all(|r| r.pass);
    let doc = json!({ "records": records.iter().map(identities::Record::to_json).collect::<Vec<_>>(), "pass": pass });
    Ok(Outcome { text: pretty(&doc), status: if pass { ExitStatus::Ok } else { ExitStatus::Acceptance } })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}
