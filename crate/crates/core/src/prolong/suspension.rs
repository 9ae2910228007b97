//! Suspension of a contactomorphism: on `[0,1] × V` the plane `D` is the
//! Legendrian line `ℓ` rotated by a twist profile `ρ(t, v)` inside `ξ`, plus
//! the suspension direction `∂t`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{eval3, extend, with_fiber, ContactModel};
use crate::engel::{EngelStructure, Provenance};
use crate::error::{EngelError, Result};
use crate::frame::{ChartVectorField, Coord, FrameModel, Section};
use crate::lorentz::{product_extension, ExtensionBase};
use crate::numeric::{decompose, rk4_step, subspace_angle, NumericConfig};
use crate::surface::{unit_tangent_frames, ConformalSurface};

/// `v ↦ (φ(v), Dφ(v))`.
pub type MapWithDerivative = Arc<dyn Fn(&[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> + Send + Sync>;
pub type TwistProfile = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Tolerance on the boundary conditions `ρ(0) = 0`, `ρ(1) = Kπ − d`.
pub const TWIST_BOUNDARY_TOL: f64 = 1e-6;
/// Largest angle between `Dφ(ξ_v)` and `ξ_{φ(v)}` accepted for a contactomorphism.
const PRESERVATION_TOL: f64 = 1e-6;

#[derive(Clone)]
pub struct SuspensionData {
    /// Must carry a Legendrian frame `(ℓ₁, ℓ₂)`; `ℓ = ℓ₁`.
    pub contact: ContactModel,
    pub map: MapWithDerivative,
    pub rho: TwistProfile,
    pub twists: i64,
}

impl std::fmt::Debug for SuspensionData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SuspensionData")
            .field("contact", &self.contact.name)
            .field("twists", &self.twists)
            .finish()
    }
}

fn legendrian(c: &ContactModel) -> Result<[ChartVectorField; 2]> {
    c.legendrian
        .clone()
        .ok_or_else(|| EngelError::InvalidParameter("suspension needs a Legendrian frame".into()))
}

/// Coordinates of a vector at `v` in the frame `(ℓ₁, ℓ₂, reeb)`.
fn frame_coords(c: &ContactModel, l: &[ChartVectorField; 2], u: &DVector<f64>, v: &[f64]) -> Result<DVector<f64>> {
    let basis = [l[0].eval_unchecked(v)?, l[1].eval_unchecked(v)?, c.reeb.eval_unchecked(v)?];
    decompose(u, &basis).ok_or(EngelError::DegenerateKernel { point: v.to_vec() })
}

/// Twisting angle `d(v)`: minus the oriented angle, in `(−π/2, π/2]`, from
/// `ℓ_v` to the pulled back line `(φ*ℓ)_v = Dφ(v)⁻¹ ℓ_{φ(v)}`, measured in
/// the Euclidean metric making `(ℓ₁, ℓ₂)` orthonormal.
pub fn twisting_angle(sd: &SuspensionData, v: &[f64]) -> Result<f64> {
    let l = legendrian(&sd.contact)?;
    let (w, jac) = (sd.map)(v)?;
    let target = l[0].eval_unchecked(&w)?;
    let pulled = jac
        .clone()
        .lu()
        .solve(&target)
        .ok_or(EngelError::DegenerateKernel { point: v.to_vec() })?;
    let c = frame_coords(&sd.contact, &l, &pulled, v)?;
    let mut a = c[1].atan2(c[0]);
    if a > PI / 2.0 {
        a -= PI;
    } else if a <= -PI / 2.0 {
        a += PI;
    }
    Ok(-a)
}

/// Check that `φ` preserves `ξ` with its orientation at `v`.
fn check_contactomorphism(sd: &SuspensionData, l: &[ChartVectorField; 2], v: &[f64]) -> Result<()> {
    let (w, jac) = (sd.map)(v)?;
    let pushed: Vec<DVector<f64>> = (0..2).map(|i| l[i].eval_unchecked(v).map(|x| &jac * x)).collect::<Result<_>>()?;
    let target = [l[0].eval_unchecked(&w)?, l[1].eval_unchecked(&w)?];
    if subspace_angle(&pushed, &target) > PRESERVATION_TOL {
        return Err(EngelError::InvalidParameter("map does not preserve the contact planes".into()));
    }
    let a = frame_coords(&sd.contact, l, &pushed[0], &w)?;
    let b = frame_coords(&sd.contact, l, &pushed[1], &w)?;
    if a[0] * b[1] - a[1] * b[0] <= 0.0 {
        return Err(EngelError::InvalidParameter("map reverses the orientation of the contact planes".into()));
    }
    Ok(())
}

/// Boundary values and monotonicity of the twist profile at sample points of `V`.
pub fn validate(sd: &SuspensionData, n: usize) -> Result<()> {
    let l = legendrian(&sd.contact)?;
    let h = 1e-5;
    for v in sd.contact.domain.sample(n, 3) {
        check_contactomorphism(sd, &l, &v)?;
        let r0 = (sd.rho)(0.0, &v);
        if r0.abs() > TWIST_BOUNDARY_TOL {
            return Err(EngelError::TwistBoundary(format!("rho(0) = {r0:e} at {v:?}")));
        }
        let target = sd.twists as f64 * PI - twisting_angle(sd, &v)?;
        let r1 = (sd.rho)(1.0, &v);
        if (r1 - target).abs() > TWIST_BOUNDARY_TOL {
            return Err(EngelError::TwistBoundary(format!("rho(1) = {r1}, expected {target} at {v:?}")));
        }
        for i in 0..=32 {
            let t = i as f64 / 32.0;
            let rt = ((sd.rho)(t + h, &v) - (sd.rho)(t - h, &v)) / (2.0 * h);
            if rt <= 0.0 || !rt.is_finite() {
                return Err(EngelError::TwistMonotonicityError { t });
            }
        }
    }
    Ok(())
}

/// Engel structure on the chart `V × t` of the mapping torus:
/// `D = ⟨∂t, cos ρ ℓ₁ + sin ρ ℓ₂⟩`, `E = ⟨∂t, ℓ₁, ℓ₂⟩`, `W = ∂t`.
pub fn suspension(sd: &SuspensionData) -> Result<EngelStructure> {
    sd.contact.check_contact(32, &NumericConfig::default())?;
    validate(sd, 16)?;
    let l = legendrian(&sd.contact)?;
    let dom = with_fiber(&sd.contact.domain, "t", Coord::Interval { lo: -0.5, hi: 1.5 }, (0.0, 1.0));
    let (a, b, rho) = (l[0].clone(), l[1].clone(), sd.rho.clone());
    let rotated = ChartVectorField::new(&dom, move |p| {
        let (s, c) = rho(p[3], &p[..3]).sin_cos();
        let v = eval3(&a, p) * c + eval3(&b, p) * s;
        DVector::from_vec(vec![v[0], v[1], v[2], 0.0])
    });
    let dt = ChartVectorField::coordinate(&dom, 3);
    let (e1, e2) = (extend(&l[0], &dom), extend(&l[1], &dom));
    Ok(EngelStructure {
        name: format!("suspension-{}", sd.contact.name),
        model: FrameModel::coordinate_chart(&dom),
        d_span: vec![Section::Chart(dt.clone()), Section::Chart(rotated)],
        e_span: vec![Section::Chart(dt.clone()), Section::Chart(e1.clone()), Section::Chart(e2.clone())],
        w: Section::Chart(dt),
        transverse: Section::Chart(extend(&sd.contact.reeb, &dom)),
        quotient_frame: [Section::Chart(e1), Section::Chart(e2)],
        provenance: Provenance::Suspension { twists: sd.twists },
        flow_period: None,
    })
}

/// The identity map with `K = 1`, `ρ = πt`.
pub fn identity_suspension_data(contact: ContactModel) -> SuspensionData {
    SuspensionData {
        contact,
        map: Arc::new(|v| Ok((v.to_vec(), DMatrix::identity(3, 3)))),
        rho: Arc::new(|t, _| PI * t),
        twists: 1,
    }
}

/// Time-`time` flow of a chart field together with its derivative, by RK4
/// on the variational system `J′ = DX · J`. The flow may leave the declared
/// chart box; fields are evaluated without the domain check.
pub fn flow_with_derivative(field: &ChartVectorField, v: &[f64], time: f64, steps: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = v.len();
    let h = time / steps as f64;
    let mut y: Vec<f64> = v.to_vec();
    for i in 0..n {
        for j in 0..n {
            y.push(if i == j { 1.0 } else { 0.0 });
        }
    }
    let cfg = NumericConfig::default();
    let mut rhs = |y: &[f64]| -> Result<Vec<f64>> {
        let p = &y[..n];
        let f = field.eval_unchecked(p)?;
        let mut dx = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut qp = p.to_vec();
            let mut qm = p.to_vec();
            qp[k] += cfg.fd_step;
            qm[k] -= cfg.fd_step;
            let col = (field.eval_unchecked(&qp)? - field.eval_unchecked(&qm)?) / (2.0 * cfg.fd_step);
            dx.set_column(k, &col);
        }
        let j = DMatrix::from_column_slice(n, n, &y[n..]);
        let dj = dx * j;
        let mut out: Vec<f64> = f.iter().copied().collect();
        out.extend(dj.iter().copied());
        Ok(out)
    };
    for _ in 0..steps {
        y = rk4_step(&y, h, &mut rhs)?;
    }
    if y.iter().any(|x| !x.is_finite()) {
        return Err(EngelError::NonFiniteEvaluation { point: v.to_vec() });
    }
    Ok((y[..n].to_vec(), DMatrix::from_column_slice(n, n, &y[n..])))
}

/// Unit tangent bundle of the `κ = −1` Poincaré disk with `ξ = ⟨Y, Z⟩`,
/// reeb field `X` and Legendrian frame `(ℓ₁, ℓ₂) = (Z, −Y)`.
pub fn geodesic_contact_model() -> Result<ContactModel> {
    let surf = ConformalSurface::poincare(-1.0)?;
    let fr = unit_tangent_frames(&surf);
    let dom = fr.domain.clone();
    let y = fr.fields[1].clone();
    let minus_y = ChartVectorField::new(&dom, move |p| -y.eval_unchecked(p).unwrap_or_else(|_| DVector::from_element(3, f64::NAN)));
    Ok(ContactModel {
        name: "geodesic".into(),
        domain: dom,
        xi: [fr.fields[1].clone(), fr.fields[2].clone()],
        reeb: fr.fields[0].clone(),
        legendrian: Some([fr.fields[2].clone(), minus_y]),
    })
}

const GEODESIC_STEPS: usize = 800;

fn geodesic_map(contact: &ContactModel) -> MapWithDerivative {
    let x = contact.reeb.clone();
    Arc::new(move |v| flow_with_derivative(&x, v, 2.0 * PI, GEODESIC_STEPS))
}

/// Suspension of the time-2π geodesic flow on the Poincaré disk with
/// `K = 0` and `ρ = arctan(tanh 2πt)`, the angle of the pulled back line
/// `φ_{2πt}*Z` in the frame `(Z, −Y)`.
pub fn geodesic_suspension_data() -> Result<SuspensionData> {
    let contact = geodesic_contact_model()?;
    Ok(SuspensionData {
        map: geodesic_map(&contact),
        contact,
        rho: Arc::new(|t, _| (2.0 * PI * t).tanh().atan()),
        twists: 0,
    })
}

/// Largest angle between `DΦ(D′)` and the product-extension plane
/// `⟨X + Θ, Z⟩` under `Φ(v, t) = (φ_{2πt}(v), θ = 2πt)`.
pub fn product_correspondence_defect(s: &EngelStructure, points: &[Vec<f64>]) -> Result<f64> {
    let surf = ConformalSurface::poincare(-1.0)?;
    let ext = product_extension(ExtensionBase::Chart(surf));
    let fields = match &ext.frame {
        FrameModel::Chart(fr) => fr.fields.clone(),
        FrameModel::Lie(_) => unreachable!("chart base"),
    };
    let x3 = geodesic_contact_model()?.reeb;
    let mut worst: f64 = 0.0;
    for p in points {
        let (v, t) = (&p[..3], p[3]);
        let steps = ((GEODESIC_STEPS as f64 * t.abs()).ceil() as usize).max(1);
        let (q, jac) = flow_with_derivative(&x3, v, 2.0 * PI * t, steps)?;
        let mut image = q.clone();
        image.push(2.0 * PI * t);
        let xq = x3.eval_unchecked(&q)?;
        let dt_image = DVector::from_vec(vec![2.0 * PI * xq[0], 2.0 * PI * xq[1], 2.0 * PI * xq[2], 2.0 * PI]);
        let r = s.d_span[1].eval(p)?;
        let ju = &jac * DVector::from_vec(vec![r[0], r[1], r[2]]);
        let pushed = [dt_image, DVector::from_vec(vec![ju[0], ju[1], ju[2], 0.0])];
        let target = [
            fields[0].eval_unchecked(&image)? + fields[3].eval_unchecked(&image)?,
            fields[2].eval_unchecked(&image)?,
        ];
        worst = worst.max(subspace_angle(&pushed, &target));
    }
    Ok(worst)
}

/// The two suspensions `D±` of the time-2π geodesic flow built from the
/// unstable and stable lines `E^u = (Y + Z)/√2`, `E^s = (Z − Y)/√2`, both with
/// `K = 1`, `ρ = πt`. They share `E = ⟨∂t, Y, Z⟩` and twist in opposite senses.
pub fn bi_engel_pair() -> Result<(EngelStructure, EngelStructure)> {
    let base = geodesic_contact_model()?;
    let fr = unit_tangent_frames(&ConformalSurface::poincare(-1.0)?);
    let dom = fr.domain.clone();
    let combo = |cy: f64, cz: f64| {
        let (y, z) = (fr.fields[1].clone(), fr.fields[2].clone());
        ChartVectorField::new(&dom, move |p| {
            let nan = || DVector::from_element(3, f64::NAN);
            (y.eval_unchecked(p).unwrap_or_else(|_| nan()) * cy + z.eval_unchecked(p).unwrap_or_else(|_| nan()) * cz)
                * FRAC_1_SQRT_2
        })
    };
    let (eu, es) = (combo(1.0, 1.0), combo(-1.0, 1.0));
    let build = |l1: ChartVectorField, l2: ChartVectorField, tag: &str| -> Result<EngelStructure> {
        let mut contact = base.clone();
        contact.name = format!("geodesic-{tag}");
        contact.legendrian = Some([l1, l2]);
        let sd = SuspensionData {
            map: geodesic_map(&contact),
            contact,
            rho: Arc::new(|t, _| PI * t),
            twists: 1,
        };
        suspension(&sd)
    };
    Ok((build(eu.clone(), es.clone(), "plus")?, build(es, eu, "minus")?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engel::verify_engel;
    use crate::prolong::cartan_prolongation;

    #[test]
    fn identity_suspension_is_cartan() {
        let c = ContactModel::standard_r3();
        let s = suspension(&identity_suspension_data(c.clone())).unwrap();
        let cartan = cartan_prolongation(&c).unwrap();
        assert!(verify_engel(&s, 100, 1e-8).unwrap().summary.pass);
        for p in s.sample_points(100) {
            let q = [p[0], p[1], p[2], PI * p[3]];
            let a: Vec<_> = s.d_span.iter().map(|x| x.eval(&p).unwrap()).collect();
            let b: Vec<_> = cartan.d_span.iter().map(|x| x.eval(&q).unwrap()).collect();
            assert!(subspace_angle(&a, &b) < 1e-9);
        }
    }

    #[test]
    fn geodesic_suspension_verifies_and_matches_product_extension() {
        let sd = geodesic_suspension_data().unwrap();
        for v in sd.contact.domain.sample(8, 1) {
            let d = twisting_angle(&sd, &v).unwrap();
            assert!((d + (2.0 * PI).tanh().atan()).abs() < 1e-6, "d = {d}");
        }
        let s = suspension(&sd).unwrap();
        assert!(verify_engel(&s, 100, 1e-8).unwrap().summary.pass);
        let defect = product_correspondence_defect(&s, &s.sample_points(12)).unwrap();
        assert!(defect < 1e-6, "defect {defect}");
    }

    #[test]
    fn bi_engel_pair_shares_e_and_twists_oppositely() {
        let (plus, minus) = bi_engel_pair().unwrap();
        for s in [&plus, &minus] {
            assert!(verify_engel(s, 60, 1e-8).unwrap().summary.pass);
        }
        for p in plus.sample_points(40) {
            let a: Vec<_> = plus.e_span.iter().map(|x| x.eval(&p).unwrap()).collect();
            let b: Vec<_> = minus.e_span.iter().map(|x| x.eval(&p).unwrap()).collect();
            assert!(subspace_angle(&a, &b) < 1e-12);
            // Rotation sense of D/W measured in the common frame (Y, Z).
            let c = geodesic_contact_model().unwrap();
            let yz = [c.xi[0].clone(), c.xi[1].clone()];
            let sense = |s: &EngelStructure| {
                let mut q = p.clone();
                let d0 = s.d_span[1].eval(&q).unwrap();
                q[3] += 1e-4;
                let d1 = s.d_span[1].eval(&q).unwrap();
                let a = frame_coords(&c, &yz, &d0.rows(0, 3).into_owned(), &p[..3]).unwrap();
                let b = frame_coords(&c, &yz, &d1.rows(0, 3).into_owned(), &p[..3]).unwrap();
                (a[0] * b[1] - a[1] * b[0]).signum()
            };
            assert_eq!(sense(&plus), -sense(&minus));
        }
    }

    #[test]
    fn decreasing_profile_is_rejected() {
        let mut sd = identity_suspension_data(ContactModel::standard_r3());
        sd.rho = Arc::new(|t, _| PI * t * t * (3.0 - 2.0 * t) - 0.3 * (2.0 * PI * t).sin());
        let err = suspension(&sd).unwrap_err();
        assert!(matches!(err, EngelError::TwistMonotonicityError { .. }));
    }

    #[test]
    fn wrong_endpoint_is_rejected() {
        let mut sd = identity_suspension_data(ContactModel::standard_r3());
        sd.rho = Arc::new(|t, _| 0.9 * PI * t);
        assert!(matches!(suspension(&sd).unwrap_err(), EngelError::TwistBoundary(_)));
    }
}
