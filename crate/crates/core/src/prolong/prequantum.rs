use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3};

use super::{eval3, with_fiber, ContactModel};
use crate::engel::{EngelStructure, Provenance};
use crate::error::{EngelError, Result};
use crate::frame::{ChartDomain, ChartVectorField, Coord, FrameModel, ScalarFn, Section};
use crate::numeric::{line_angle, NumericConfig};

pub type OneForm = Arc<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>;

/// Tolerance on `|dβ − ι_{w̄} vol|` at the sample points.
pub const CURVATURE_TOL: f64 = 1e-6;

/// Input of the pre-quantum prolongation on `V × S¹`.
#[derive(Clone)]
pub struct PrequantumData {
    pub contact: ContactModel,
    /// Legendrian, volume-preserving vector field on `V`.
    pub w_bar: ChartVectorField,
    /// Density of the volume form against `dv₁ ∧ dv₂ ∧ dv₃`.
    pub vol: ScalarFn,
    /// Connection form coefficients `β = β₁dv₁ + β₂dv₂ + β₃dv₃`.
    pub beta: OneForm,
}

impl std::fmt::Debug for PrequantumData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrequantumData").field("contact", &self.contact.name).finish()
    }
}

/// Largest component of `dβ − ι_{w̄} vol` over the sample points.
pub fn curvature_defect(d: &PrequantumData, points: &[Vec<f64>], h: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let mut db = Matrix3::zeros();
        for i in 0..3 {
            let mut qp = p.clone();
            let mut qm = p.clone();
            qp[i] += h;
            qm[i] -= h;
            let (bp, bm) = ((d.beta)(&qp), (d.beta)(&qm));
            for j in 0..3 {
                // ∂_i β_j
                db[(i, j)] = (bp[j] - bm[j]) / (2.0 * h);
            }
        }
        let w = d.w_bar.eval(p)?;
        let rho = (d.vol)(p);
        for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            let dbeta = db[(i, j)] - db[(j, i)];
            // vol(w, e_i, e_j) = ρ·det(w, e_i, e_j) = ρ·ε_{k i j} w_k
            let sign = if (i, j, k) == (0, 2, 1) { -1.0 } else { 1.0 };
            let iota = rho * sign * w[k];
            worst = worst.max((dbeta - iota).abs());
        }
    }
    if !worst.is_finite() {
        return Err(EngelError::NonFiniteEvaluation { point: vec![] });
    }
    Ok(worst)
}

/// Horizontal lift `u ↦ u − β(u)∂θ` of a field on `V`.
pub(crate) fn horizontal_lift(u: &ChartVectorField, beta: &OneForm, dom4: &Arc<ChartDomain>) -> ChartVectorField {
    let (u, beta) = (u.clone(), beta.clone());
    ChartVectorField::new(dom4, move |p| {
        let v = eval3(&u, p);
        let b = beta(&p[..3]);
        DVector::from_vec(vec![v[0], v[1], v[2], -(b[0] * v[0] + b[1] * v[1] + b[2] * v[2])])
    })
}

/// Engel structure on `V × S¹`: `E = ker(dθ + β)`, `D = E ∩ (Dπ)⁻¹ξ`, `W` the
/// horizontal lift of `w̄`. Requires the curvature identity `dβ = ι_{w̄} vol`.
pub fn prequantum_prolongation(d: &PrequantumData) -> Result<EngelStructure> {
    let cfg = NumericConfig::default();
    d.contact.check_contact(64, &cfg)?;
    let samples = d.contact.domain.sample(64, 11);
    let residual = curvature_defect(d, &samples, cfg.fd_step)?;
    if residual > CURVATURE_TOL {
        return Err(EngelError::CurvatureMismatch { residual });
    }
    let dom = with_fiber(&d.contact.domain, "theta", Coord::Periodic { period: 2.0 * PI }, (0.0, 2.0 * PI));
    let lift = |u: &ChartVectorField| horizontal_lift(u, &d.beta, &dom);
    let coords: Vec<ChartVectorField> = (0..3).map(|i| ChartVectorField::coordinate(&d.contact.domain, i)).collect();
    // The ξ section least aligned with w̄ completes W to a frame of E/W.
    let p0 = &samples[0];
    let wv = d.w_bar.eval(p0)?;
    let other = d
        .contact
        .xi
        .iter()
        .max_by(|a, b| {
            let fa = line_angle(&a.eval(p0).unwrap_or(wv.clone()), &wv);
            let fb = line_angle(&b.eval(p0).unwrap_or(wv.clone()), &wv);
            fa.total_cmp(&fb)
        })
        .expect("two sections");
    Ok(EngelStructure {
        name: format!("prequantum-{}", d.contact.name),
        model: FrameModel::coordinate_chart(&dom),
        d_span: vec![Section::Chart(lift(&d.contact.xi[0])), Section::Chart(lift(&d.contact.xi[1]))],
        e_span: coords.iter().map(|c| Section::Chart(lift(c))).collect(),
        w: Section::Chart(lift(&d.w_bar)),
        transverse: Section::Chart(ChartVectorField::coordinate(&dom, 3)),
        quotient_frame: [Section::Chart(lift(other)), Section::Chart(lift(&d.contact.reeb))],
        provenance: Provenance::Prequantum,
        flow_period: None,
    })
}

/// `V = (x, z, w)`, `ξ = ker(dz − w dx)`, `w̄ = ∂w`, `vol = dx∧dz∧dw`, `β = −z dx`.
pub fn prequantum_local_model() -> PrequantumData {
    let dom = ChartDomain::cube(&["x", "z", "w"], -2.0, 2.0);
    let xi0 = ChartVectorField::new(&dom, |p| DVector::from_vec(vec![1.0, p[2], 0.0])).with_jacobian(|_| {
        let mut j = DMatrix::zeros(3, 3);
        j[(1, 2)] = 1.0;
        j
    });
    let dw = ChartVectorField::coordinate(&dom, 2);
    PrequantumData {
        contact: ContactModel {
            name: "local".into(),
            domain: dom.clone(),
            xi: [xi0, dw.clone()],
            reeb: ChartVectorField::coordinate(&dom, 1),
            legendrian: None,
        },
        w_bar: dw,
        vol: Arc::new(|_| 1.0),
        beta: Arc::new(|p| [-p[1], 0.0, 0.0]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engel::{darboux_standard, verify_engel};
    use crate::numeric::subspace_angle;

    #[test]
    fn local_model_is_the_standard_chart() {
        let s = prequantum_prolongation(&prequantum_local_model()).unwrap();
        assert!(verify_engel(&s, 200, 1e-8).unwrap().summary.pass);
        let std = darboux_standard();
        // (x, z, w, θ) ↦ (x, y = θ, z, w)
        let perm = |v: &DVector<f64>| DVector::from_vec(vec![v[0], v[3], v[1], v[2]]);
        for p in s.sample_points(100) {
            let q = [p[0], p[3] / PI - 1.0, p[1], p[2]];
            let a: Vec<_> = s.d_span.iter().map(|x| perm(&x.eval(&p).unwrap())).collect();
            let b: Vec<_> = std.d_span.iter().map(|x| x.eval(&q).unwrap()).collect();
            assert!(subspace_angle(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn w_is_horizontal() {
        let d = prequantum_local_model();
        let s = prequantum_prolongation(&d).unwrap();
        for p in s.sample_points(100) {
            let w = s.w.eval(&p).unwrap();
            let b = (d.beta)(&p[..3]);
            let pairing = w[3] + b[0] * w[0] + b[1] * w[1] + b[2] * w[2];
            assert!(pairing.abs() < 1e-9);
        }
    }

    #[test]
    fn wrong_connection_is_rejected() {
        let mut d = prequantum_local_model();
        d.beta = Arc::new(|p| [-2.0 * p[1], 0.0, 0.0]);
        let err = prequantum_prolongation(&d).unwrap_err();
        assert!(matches!(err, EngelError::CurvatureMismatch { .. }));
    }
}
