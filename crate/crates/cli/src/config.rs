use crate::error::CliError;
use nzbc_core::branchfn::Background;
use nzbc_core::planewave::region_boundary;
use nzbc_core::quad::QuadratureSpec;
use nzbc_core::scattering::{BoxDatum, InitialDatum, SampledDatum};
use nzbc_core::C64;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Everything a verb may need. Sections a verb does not use are ignored.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datum: DatumConfig,
    /// Similarity values for `params`.
    #[serde(default)]
    pub xi: Vec<f64>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub k_grid: Option<KGridConfig>,
    #[serde(default)]
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub identities: Option<IdentitySection>,
    #[serde(default)]
    pub quadrature: Option<QuadratureSection>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumConfig {
    /// `q(x) = β e^{iχ}` on `|x| < L`, `q0` outside.
    Box { q0: f64, beta: f64, chi: f64, half_width: f64 },
    /// The bare background `q ≡ q0 e^{iφ}`.
    Background { q0: f64, #[serde(default)] phase: f64 },
    /// Samples `x, Re q, Im q` read from a CSV file.
    Sampled {
        path: PathBuf,
        q0: f64,
        #[serde(default)]
        phi_minus: f64,
        #[serde(default)]
        phi_plus: f64,
        margin: f64,
    },
}

/// Evenly spaced values, endpoints included.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n).map(|j| self.start + (self.end - self.start) * j as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// Points `(x, t) = (ξt, t)` for every pair of listed `ξ` and `t`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub xi: Axis,
    pub t: Axis,
    /// Emit a region column, which also allows grids spanning both regions.
    #[serde(default)]
    pub region_column: bool,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Axis {
    Range(Range),
    List(Vec<f64>),
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Range(r) => r.values(),
            Axis::List(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KGridConfig {
    pub re: Range,
    pub im: Range,
}

impl KGridConfig {
    pub fn points(&self) -> Vec<C64> {
        let im = self.im.values();
        let re = self.re.values();
        im.iter().flat_map(|&y| re.iter().map(move |&x| C64::new(x, y))).collect()
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub half_width: f64,
    pub n_points: usize,
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    /// `null` disables the edge check.
    #[serde(default = "default_edge_tol")]
    pub edge_tol: Option<f64>,
    #[serde(default = "default_omega_nodes")]
    pub omega_nodes: usize,
    /// Defaults to `±{1, …, 5}ξ_b/6`.
    #[serde(default)]
    pub envelope_xi: Option<Vec<f64>>,
    #[serde(default = "default_exponent_window")]
    pub exponent_window: [f64; 2],
    #[serde(default = "default_envelope_tol")]
    pub envelope_tol: f64,
}

fn default_edge_tol() -> Option<f64> {
    Some(1e-8)
}

fn default_omega_nodes() -> usize {
    14
}

fn default_exponent_window() -> [f64; 2] {
    [-0.75, -0.3]
}

fn default_envelope_tol() -> f64 {
    0.05
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IdentitySection {
    /// Defaults to `{-5, …, -1}ξ_b/6`.
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Also check realness of `ω`, `g∞` and `H0` at the first `ξ`.
    #[serde(default = "default_true")]
    pub reflection: bool,
}

fn default_threshold() -> f64 {
    1e-8
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let text = match name {
            "box" => BOX,
            "fig-qmod" => FIG_QMOD,
            "validate" => VALIDATE,
            "background" => BACKGROUND,
            other => return Err(CliError::Config(format!("unknown preset {other:?}; known: {}", PRESETS.join(", ")))),
        };
        Self::from_json(text)
    }

    pub fn datum(&self) -> Result<InitialDatum, CliError> {
        self.datum.build()
    }

    /// Quadrature settings after overrides and the global tolerance factor.
    pub fn spec(&self, tol_scale: f64) -> Result<QuadratureSpec, CliError> {
        if !(tol_scale > 0.0 && tol_scale.is_finite()) {
            return Err(CliError::Config(format!("tolerance scale {tol_scale} must be positive")));
        }
        let mut spec = QuadratureSpec::default();
        if let Some(q) = self.quadrature {
            spec.rel_tol = q.rel_tol.unwrap_or(spec.rel_tol);
            spec.abs_tol = q.abs_tol.unwrap_or(spec.abs_tol);
        }
        Ok(spec.scaled(tol_scale))
    }
}

impl DatumConfig {
    pub fn build(&self) -> Result<InitialDatum, CliError> {
        let datum = match self {
            DatumConfig::Box { q0, beta, chi, half_width } => InitialDatum::Box(BoxDatum::new(*q0, *beta, *chi, *half_width)?),
            DatumConfig::Background { q0, phase } => InitialDatum::Box(BoxDatum::new(*q0, *q0, *phase, 1.0)?),
            DatumConfig::Sampled { path, q0, phi_minus, phi_plus, margin } => {
                let bg = Background::with_phases(*q0, *phi_minus, *phi_plus).map_err(nzbc_core::Error::from)?;
                let (x, values) = read_samples(path)?;
                InitialDatum::Sampled(SampledDatum::from_grid(&x, values, bg, *margin)?)
            }
        };
        if let (DatumConfig::Background { phase, .. }, false) = (self, datum.is_background()) {
            return Err(CliError::Config(format!("background phase {phase} not representable")));
        }
        Ok(datum)
    }
}

/// Read `x, Re q, Im q` rows; a header row is skipped when its first field
/// is not a number.
pub fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<C64>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut x = Vec::new();
    let mut q = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let fields: Vec<&str> = record.iter().collect();
        if fields.len() != 3 {
            return Err(CliError::Config(format!("{}: line {} has {} columns, expected 3", path.display(), line + 1, fields.len())));
        }
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|s| s.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                x.push(v[0]);
                q.push(C64::new(v[1], v[2]));
            }
            Err(_) if line == 0 => continue,
            Err(e) => return Err(CliError::Config(format!("{}: line {}: {e}", path.display(), line + 1))),
        }
    }
    Ok((x, q))
}

pub const PRESETS: [&str; 4] = ["box", "fig-qmod", "validate", "background"];

/// Default identity `ξ` set `{-5, …, -1}ξ_b/6`.
pub fn default_identity_xi(bg: &Background) -> Vec<f64> {
    let b = region_boundary(bg);
    (1..=5).rev().map(|j| -b * j as f64 / 6.0).collect()
}

/// Default envelope `ξ` set `±{1, …, 5}ξ_b/6`.
pub fn default_envelope_xi(bg: &Background) -> Vec<f64> {
    let b = region_boundary(bg);
    (1..=5).flat_map(|j| [-b * j as f64 / 6.0, b * j as f64 / 6.0]).collect()
}

const BOX: &str = r#"{
  "datum": { "kind": "box", "q0": 0.5, "beta": 0.45, "chi": 0.0, "half_width": 1.0 },
  "xi": [-100.0, -6.0, -2.0, -1.0, 0.0, 1.0, 6.0],
  "grid": { "xi": [-6.0, -4.0], "t": { "start": 1.0, "end": 20.0, "count": 20 } },
  "k_grid": { "re": { "start": -3.0, "end": 3.0, "count": 61 }, "im": { "start": 0.0, "end": 0.0, "count": 1 } },
  "identities": {}
}"#;

const FIG_QMOD: &str = r#"{
  "datum": { "kind": "box", "q0": 0.5, "beta": 0.45, "chi": 0.0, "half_width": 1.0 },
  "grid": {
    "xi": { "start": -2.740038777097872, "end": -0.08838834764831845, "count": 16 },
    "t": { "start": 1.0, "end": 20.0, "count": 20 }
  }
}"#;

const VALIDATE: &str = r#"{
  "datum": { "kind": "box", "q0": 0.5, "beta": 0.45, "chi": 0.0, "half_width": 2.0 },
  "simulation": { "half_width": 600.0, "n_points": 16384, "snapshots": [10.0, 20.0, 40.0], "edge_tol": null }
}"#;

const BACKGROUND: &str = r#"{
  "datum": { "kind": "background", "q0": 0.5 },
  "xi": [-6.0, -1.0, 1.0, 6.0],
  "grid": { "xi": [-6.0, -1.0, 1.0, 6.0], "t": [1.0, 10.0], "region_column": true },
  "k_grid": { "re": { "start": -2.0, "end": 2.0, "count": 9 }, "im": { "start": 0.0, "end": 0.0, "count": 1 } },
  "simulation": { "half_width": 40.0, "n_points": 1024, "snapshots": [1.0, 2.0] }
}"#;
