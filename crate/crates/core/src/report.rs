//! Machine-readable reports: a versioned JSON envelope with fixed float
//! formatting, and the curvature sweep table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{estimate_global_type, EstimatorConfig, GlobalType};
use crate::error::Result;
use crate::presets::{build_preset, KAPPA_SWEEP};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    pub parameters: Value,
    pub result: &'a T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'a str, parameters: Value, result: &'a T) -> Self {
        Self { schema_version: SCHEMA_VERSION, command, parameters, result }
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.push_str(&"  ".repeat(n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().unwrap_or(f64::NAN);
                let _ = write!(out, "{x:.16e}");
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (i, (k, item)) in map.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty JSON in which every float is written as `{:.16e}` (17 significant
/// digits) and non-finite floats become `null`.
pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

/// One row of the curvature sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kappa: f64,
    /// `κ(κ + 1)`, whose sign decides the magnetic type.
    pub magnetic_discriminant: f64,
    pub magnetic_expected: GlobalType,
    pub magnetic_estimated: GlobalType,
    pub product_expected: GlobalType,
    pub product_estimated: GlobalType,
}

impl SweepRow {
    pub fn agrees(&self) -> bool {
        self.magnetic_expected == self.magnetic_estimated && self.product_expected == self.product_estimated
    }
}

/// Type predicted by the sign of `c`: elliptic, genuine parabolic or genuine hyperbolic.
pub fn type_from_sign(c: f64) -> GlobalType {
    if c > 0.0 {
        GlobalType::Elliptic
    } else if c == 0.0 {
        GlobalType::Parabolic { genuine: true }
    } else {
        GlobalType::Hyperbolic { genuine: true }
    }
}

/// Estimated global types of the magnetic and product extensions over the
/// standard curvature values, next to the sign law.
pub fn kappa_sweep(n_orbits: usize, cfg: &EstimatorConfig) -> Result<Vec<SweepRow>> {
    KAPPA_SWEEP
        .iter()
        .map(|&k| {
            let mag = build_preset("lorentz-magnetic", Some(k))?;
            let prod = build_preset("lorentz-product", Some(k))?;
            // adding 0.0 turns the −0 at κ = −1 into +0
            let disc = k * (k + 1.0) + 0.0;
            Ok(SweepRow {
                kappa: k,
                magnetic_discriminant: disc,
                magnetic_expected: type_from_sign(disc),
                magnetic_estimated: estimate_global_type(&mag, n_orbits, cfg)?.kind,
                product_expected: type_from_sign(k),
                product_estimated: estimate_global_type(&prod, n_orbits, cfg)?.kind,
            })
        })
        .collect()
}

/// Plain-text table of the sweep.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = format!("{:>6}  {:>9}  {:<22} {:<22}\n", "kappa", "k(k+1)", "magnetic", "product");
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6.2}  {:>9.3}  {:<22} {:<22}",
            r.kappa,
            r.magnetic_discriminant,
            r.magnetic_estimated.to_string(),
            r.product_estimated.to_string()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_have_fixed_width() {
        let s = to_json_string(&json!({"a": 0.1, "b": [1, 2.5], "c": "x", "d": null})).unwrap();
        assert!(s.contains("\"a\": 1.0000000000000001e-1"));
        assert!(s.contains("2.5000000000000000e0"));
        assert!(s.contains("  1,"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"], json!(0.1));
    }

    #[test]
    fn envelope_carries_version() {
        let s = to_json_string(&Envelope::new("verify", json!({}), &3)).unwrap();
        assert!(s.contains("\"schema_version\": 1"));
    }
}
