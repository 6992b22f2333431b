use nzbc_core::C64;
use serde_json::{json, Value};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
}

pub fn json_complex(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}
