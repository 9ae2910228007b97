use std::f64::consts::PI;

use nalgebra::DVector;

use super::{eval3, extend, with_fiber, ContactModel};
use crate::engel::{EngelStructure, Provenance};
use crate::error::{EngelError, Result};
use crate::frame::{ChartVectorField, Coord, FrameModel, Section};
use crate::numeric::NumericConfig;

/// Engel structure on the projectivized contact planes: `D = ⟨∂θ, cosθ·ℓ₁ + sinθ·ℓ₂⟩`.
///
/// The fiber coordinate has period π since `θ` and `θ + π` give the same
/// line of `ξ`; each fiber is then a single closed characteristic.
pub fn cartan_prolongation(c: &ContactModel) -> Result<EngelStructure> {
    let [l1, l2] = c
        .legendrian
        .clone()
        .ok_or_else(|| EngelError::InvalidParameter("Cartan prolongation needs a Legendrian frame".into()))?;
    c.check_contact(64, &NumericConfig::default())?;
    let dom = with_fiber(&c.domain, "theta", Coord::Periodic { period: PI }, (0.0, PI));
    let (a, b) = (l1.clone(), l2.clone());
    let rot = ChartVectorField::new(&dom, move |p| {
        let (s, co) = p[3].sin_cos();
        let v = eval3(&a, p) * co + eval3(&b, p) * s;
        DVector::from_vec(vec![v[0], v[1], v[2], 0.0])
    });
    let dth = ChartVectorField::coordinate(&dom, 3);
    let (e1, e2) = (extend(&l1, &dom), extend(&l2, &dom));
    Ok(EngelStructure {
        name: format!("cartan-{}", c.name),
        model: FrameModel::coordinate_chart(&dom),
        d_span: vec![Section::Chart(dth.clone()), Section::Chart(rot)],
        e_span: vec![Section::Chart(dth.clone()), Section::Chart(e1.clone()), Section::Chart(e2.clone())],
        w: Section::Chart(dth),
        transverse: Section::Chart(extend(&c.reeb, &dom)),
        quotient_frame: [Section::Chart(e1), Section::Chart(e2)],
        provenance: Provenance::Cartan,
        flow_period: None,
    })
}
