//! Named constructions used by the command line and the test suites.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::engel::{darboux_long, darboux_standard, integrable_counterexample, EngelStructure};
use crate::error::{EngelError, Result};
use crate::lorentz::{magnetic_extension, product_extension, ConstantCurvatureUT, ExtensionBase};
use crate::prolong::propellor::{equivariant_line, hyperbolic_seed, LinePath};
use crate::prolong::suspension::geodesic_suspension_data;
use crate::prolong::{
    cartan_prolongation, flat_torus_product, lorentz_prolongation, prequantum_local_model, prequantum_prolongation,
    propellor_structure, suspension, ContactModel, PropellorVariant,
};

/// Every name accepted by [`build_preset`].
pub const PRESET_NAMES: &[&str] = &[
    "darboux",
    "long-darboux",
    "cartan-r3",
    "lorentz-product",
    "lorentz-magnetic",
    "flat-torus-product",
    "prequantum-local",
    "propellor-cat",
    "propellor-parabolic",
    "propellor-identity",
    "propellor-cat-invariant",
    "suspension-geodesic",
    "integrable-counterexample",
];

/// Curvature used by the Lorentz presets when none is given.
pub const DEFAULT_KAPPA: f64 = 1.0;

/// The six curvature values of the standard sweep.
pub const KAPPA_SWEEP: [f64; 6] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0];

pub fn cat_line() -> Result<LinePath> {
    let m = [[2, 1], [1, 1]];
    equivariant_line(m, hyperbolic_seed(m)?)
}

fn propellor(m: [[i64; 2]; 2], line: LinePath, variant: PropellorVariant) -> Result<EngelStructure> {
    Ok(propellor_structure(m, line, variant)?.1)
}

/// Build a preset; `kappa` is used by the Lorentz presets only.
pub fn build_preset(name: &str, kappa: Option<f64>) -> Result<EngelStructure> {
    let k = kappa.unwrap_or(DEFAULT_KAPPA);
    if !k.is_finite() {
        return Err(EngelError::InvalidParameter(format!("kappa must be finite, got {k}")));
    }
    let lie = || ExtensionBase::Lie(ConstantCurvatureUT::new(k));
    match name {
        "darboux" => Ok(darboux_standard()),
        "long-darboux" => Ok(darboux_long()),
        "cartan-r3" => cartan_prolongation(&ContactModel::standard_r3()),
        "lorentz-product" => lorentz_prolongation(&product_extension(lie())),
        "lorentz-magnetic" => lorentz_prolongation(&magnetic_extension(lie())),
        "flat-torus-product" => flat_torus_product(),
        "prequantum-local" => prequantum_prolongation(&prequantum_local_model()),
        "propellor-cat" => propellor([[2, 1], [1, 1]], cat_line()?, PropellorVariant::RotatingPlane),
        "propellor-cat-invariant" => propellor([[2, 1], [1, 1]], cat_line()?, PropellorVariant::InvariantField),
        "propellor-parabolic" => propellor(
            [[1, 1], [0, 1]],
            equivariant_line([[1, 1], [0, 1]], [0.0, 1.0])?,
            PropellorVariant::RotatingPlane,
        ),
        "propellor-identity" => propellor(
            [[1, 0], [0, 1]],
            Arc::new(|t: f64| [(2.0 * PI * t).cos(), (2.0 * PI * t).sin()]),
            PropellorVariant::RotatingPlane,
        ),
        "suspension-geodesic" => suspension(&geodesic_suspension_data()?),
        "integrable-counterexample" => Ok(integrable_counterexample()),
        other => Err(EngelError::InvalidParameter(format!(
            "unknown preset '{other}' (known: {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

/// Whether the preset reads `kappa`.
pub fn uses_kappa(name: &str) -> bool {
    name.starts_with("lorentz-")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds() {
        for name in PRESET_NAMES {
            build_preset(name, Some(-0.5)).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(build_preset("nope", None).is_err());
    }
}
