//! The four constructions producing Engel structures: Cartan, Lorentz,
//! pre-quantum and suspension prolongations, plus torus propellors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::frame::{ChartDomain, ChartVectorField, Coord};

pub mod cartan;
pub mod contact;
pub mod lorentz;
pub mod prequantum;
pub mod propellor;
pub mod suspension;

pub use cartan::cartan_prolongation;
pub use contact::ContactModel;
pub use lorentz::{flat_torus_product, lorentz_prolongation};
pub use prequantum::{prequantum_local_model, prequantum_prolongation, PrequantumData};
pub use propellor::{propellor_structure, PropellorVariant};
pub use suspension::{suspension, SuspensionData};

/// Append a fourth coordinate to a three-dimensional chart.
pub(crate) fn with_fiber(dom3: &ChartDomain, name: &str, coord: Coord, sample: (f64, f64)) -> Arc<ChartDomain> {
    let mut names: Vec<&str> = dom3.names.iter().map(|s| s.as_str()).collect();
    names.push(name);
    let mut coords = dom3.coords.clone();
    coords.push(coord);
    let mut sample_box = dom3.sample_box.clone();
    sample_box.push(sample);
    ChartDomain::new(&names, coords, sample_box)
}

/// A field on `V` viewed on `V × F` with zero fiber component.
pub(crate) fn extend(f3: &ChartVectorField, dom4: &Arc<ChartDomain>) -> ChartVectorField {
    let g = f3.clone();
    let field = ChartVectorField::new(dom4, move |p| pad(&eval3(&g, p)));
    if f3.has_jacobian() {
        let g = f3.clone();
        field.with_jacobian(move |p| {
            let j3 = g.jacobian(&p[..3], 0.0).unwrap_or_else(|_| DMatrix::from_element(3, 3, f64::NAN));
            let mut j = DMatrix::zeros(4, 4);
            j.view_mut((0, 0), (3, 3)).copy_from(&j3);
            j
        })
    } else {
        field
    }
}

pub(crate) fn eval3(f: &ChartVectorField, p: &[f64]) -> DVector<f64> {
    f.eval_unchecked(&p[..3])
        .unwrap_or_else(|_| DVector::from_element(3, f64::NAN))
}

pub(crate) fn pad(v: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![v[0], v[1], v[2], 0.0])
}
