use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;

use crate::engel::{EngelStructure, Provenance};
use crate::error::Result;
use crate::frame::{ChartDomain, ChartFrame, ChartVectorField, Coord, FrameModel, ScalarFn, Section};
use crate::surface::ConformalSurface;
use crate::lorentz::{check_signature, ExtensionBase, ExtensionKind, LorentzExtension};

fn constant(c: f64) -> ScalarFn {
    Arc::new(move |_| c)
}

/// Null-circle bundle of a Lorentzian 3-manifold with `D` the preimage of
/// the tautological null line and `E` the preimage of its orthogonal plane.
///
/// Product kind: `W = X + Θ`, `D = ⟨W, Z⟩`, `E = ⟨W, Z, Y⟩`.
/// Magnetic kind: `D = ⟨X̃ + Z̃, Θ⟩`, `E = ⟨X̃ + Z̃, Ỹ, Θ⟩` and
/// `W = X̃ + Z̃ − (1 + κ)Θ`, with `κ` evaluated pointwise on chart bases.
pub fn lorentz_prolongation(ext: &LorentzExtension) -> Result<EngelStructure> {
    check_signature(ext, &ext.frame.sample_points(64, 0))?;
    let kappa = ext.constant_kappa();
    let (name, provenance) = match ext.kind {
        ExtensionKind::Product => ("lorentz-product", Provenance::LorentzProduct { kappa }),
        ExtensionKind::Magnetic => ("lorentz-magnetic", Provenance::LorentzMagnetic { kappa }),
    };
    let name = match kappa {
        Some(k) => format!("{name}(kappa={k})"),
        None => name.to_string(),
    };
    let s = match (&ext.frame, ext.kind) {
        (FrameModel::Lie(m), ExtensionKind::Product) => {
            let w = Section::lie(&[1.0, 0.0, 0.0, 1.0]);
            let (y, z) = (Section::Lie(m.basis(1)), Section::Lie(m.basis(2)));
            EngelStructure {
                name,
                model: ext.frame.clone(),
                d_span: vec![w.clone(), z.clone()],
                e_span: vec![w.clone(), z.clone(), y.clone()],
                w,
                transverse: Section::Lie(m.basis(0)),
                quotient_frame: [z, y],
                provenance,
                flow_period: None,
            }
        }
        (FrameModel::Lie(m), ExtensionKind::Magnetic) => {
            let k = kappa.unwrap_or(0.0);
            let xz = Section::lie(&[1.0, 0.0, 1.0, 0.0]);
            let (yt, th) = (Section::Lie(m.basis(1)), Section::Lie(m.basis(3)));
            EngelStructure {
                name,
                model: ext.frame.clone(),
                d_span: vec![xz.clone(), th.clone()],
                e_span: vec![xz, yt.clone(), th.clone()],
                w: Section::lie(&[1.0, 0.0, 1.0, -(1.0 + k)]),
                transverse: Section::Lie(m.basis(0)),
                quotient_frame: [th, yt],
                provenance,
                flow_period: None,
            }
        }
        (FrameModel::Chart(fr), kind) => {
            let dom = &fr.domain;
            let f = &fr.fields;
            let sum = |terms: Vec<(ScalarFn, usize)>| {
                ChartVectorField::combination(dom, terms.into_iter().map(|(c, i)| (c, f[i].clone())).collect())
            };
            match kind {
                ExtensionKind::Product => {
                    let w = sum(vec![(constant(1.0), 0), (constant(1.0), 3)]);
                    EngelStructure {
                        name,
                        model: ext.frame.clone(),
                        d_span: vec![Section::Chart(w.clone()), Section::Chart(f[2].clone())],
                        e_span: vec![
                            Section::Chart(w.clone()),
                            Section::Chart(f[2].clone()),
                            Section::Chart(f[1].clone()),
                        ],
                        w: Section::Chart(w),
                        transverse: Section::Chart(f[0].clone()),
                        quotient_frame: [Section::Chart(f[2].clone()), Section::Chart(f[1].clone())],
                        provenance,
                        flow_period: None,
                    }
                }
                ExtensionKind::Magnetic => {
                    let surf = match &ext.base {
                        ExtensionBase::Chart(s) => s.clone(),
                        ExtensionBase::Lie(_) => unreachable!("chart frames come from chart bases"),
                    };
                    let xz = sum(vec![(constant(1.0), 0), (constant(1.0), 2)]);
                    let (xt, zt) = (f[0].clone(), f[2].clone());
                    let w = ChartVectorField::new(dom, move |p| {
                        let k = surf.curvature(p[0], p[1]);
                        let mut v = xt.eval_unchecked(p).unwrap_or_else(|_| DVector::from_element(4, f64::NAN))
                            + zt.eval_unchecked(p).unwrap_or_else(|_| DVector::from_element(4, f64::NAN));
                        v[3] -= 1.0 + k;
                        v
                    });
                    EngelStructure {
                        name,
                        model: ext.frame.clone(),
                        d_span: vec![Section::Chart(xz.clone()), Section::Chart(f[3].clone())],
                        e_span: vec![
                            Section::Chart(xz),
                            Section::Chart(f[1].clone()),
                            Section::Chart(f[3].clone()),
                        ],
                        w: Section::Chart(w),
                        transverse: Section::Chart(f[0].clone()),
                        quotient_frame: [Section::Chart(f[3].clone()), Section::Chart(f[1].clone())],
                        provenance,
                        flow_period: None,
                    }
                }
            }
        }
    };
    Ok(s)
}

/// Product extension of the flat torus `ℝ²/2πℤ²` by `(S¹, −dθ²)`, on the
/// chart `(x, y, φ, θ)` with every coordinate periodic.
pub fn flat_torus_product() -> Result<EngelStructure> {
    let tau = 2.0 * PI;
    let dom = ChartDomain::new(
        &["x", "y", "phi", "theta"],
        vec![Coord::Periodic { period: tau }; 4],
        vec![(0.0, tau); 4],
    );
    let x = ChartVectorField::new(&dom, |p| DVector::from_vec(vec![p[2].cos(), p[2].sin(), 0.0, 0.0]));
    let y = ChartVectorField::new(&dom, |p| DVector::from_vec(vec![-p[2].sin(), p[2].cos(), 0.0, 0.0]));
    let frame = FrameModel::Chart(ChartFrame {
        domain: dom.clone(),
        names: vec!["X".into(), "Y".into(), "Z".into(), "Theta".into()],
        fields: vec![x, y, ChartVectorField::coordinate(&dom, 2), ChartVectorField::coordinate(&dom, 3)],
    });
    let ext = LorentzExtension { kind: ExtensionKind::Product, base: ExtensionBase::Chart(ConformalSurface::flat()), frame };
    let mut s = lorentz_prolongation(&ext)?;
    s.name = "flat-torus-product".into();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engel::{cauchy_characteristic, verify_engel};
    use crate::lorentz::{magnetic_extension, product_extension, ConstantCurvatureUT};
    use crate::numeric::line_angle;
    use crate::surface::ConformalSurface;

    #[test]
    fn lie_prolongations_verify_for_all_kappas() {
        for k in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0] {
            for ext in [
                product_extension(ExtensionBase::Lie(ConstantCurvatureUT::new(k))),
                magnetic_extension(ExtensionBase::Lie(ConstantCurvatureUT::new(k))),
            ] {
                let s = lorentz_prolongation(&ext).unwrap();
                let r = verify_engel(&s, 20, 1e-8).unwrap();
                assert!(r.summary.pass, "{} fails", s.name);
            }
        }
    }

    #[test]
    fn magnetic_kappa_minus_one_has_no_theta_drift() {
        let ext = magnetic_extension(ExtensionBase::Lie(ConstantCurvatureUT::new(-1.0)));
        let s = lorentz_prolongation(&ext).unwrap();
        let w = cauchy_characteristic(&s, &[0.0; 4], 1e-8).unwrap();
        assert!(w[3].abs() < 1e-15);
        assert!(line_angle(&w, &DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn chart_prolongations_verify_on_variable_curvature() {
        let surf = ConformalSurface::bump(0.8);
        for ext in [
            product_extension(ExtensionBase::Chart(surf.clone())),
            magnetic_extension(ExtensionBase::Chart(surf.clone())),
        ] {
            let s = lorentz_prolongation(&ext).unwrap();
            let r = verify_engel(&s, 100, 1e-8).unwrap();
            assert!(r.summary.pass, "{}: {:?}", s.name, r.points.iter().find(|p| !p.passed));
        }
    }

    #[test]
    fn magnetic_theta_coefficient_tracks_pointwise_curvature() {
        let surf = ConformalSurface::bump(0.8);
        let ext = magnetic_extension(ExtensionBase::Chart(surf.clone()));
        let s = lorentz_prolongation(&ext).unwrap();
        for p in s.sample_points(50) {
            let w = cauchy_characteristic(&s, &p, 1e-8).unwrap();
            // w = a·(X̃ + Z̃ − (1+κ)Θ); read a off the horizontal components.
            let xt = match &ext.frame {
                FrameModel::Chart(fr) => fr.fields[0].eval(&p).unwrap(),
                FrameModel::Lie(_) => unreachable!(),
            };
            let a = if xt[0].abs() > xt[1].abs() { w[0] / xt[0] } else { w[1] / xt[1] };
            let theta_coef = w[3] / a;
            assert!((theta_coef + 1.0 + surf.curvature(p[0], p[1])).abs() < 1e-6);
        }
    }
}
