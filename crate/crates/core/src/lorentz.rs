//! Constant-curvature unit tangent bundles and the two Lorentzian extensions
//! (product and magnetic) built on top of a surface.

use std::sync::Arc;

use nalgebra::{DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{EngelError, Result};
use crate::frame::{ChartFrame, ChartVectorField, FrameModel, LieModel};
use crate::surface::{horizontal_xy, unit_tangent_frames, ut_domain, ConformalSurface};

/// The Lie algebra of the unit tangent bundle of a surface of constant
/// curvature `κ`: `[Z,X] = Y`, `[Z,Y] = −X`, `[X,Y] = κZ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantCurvatureUT {
    pub kappa: f64,
    pub model: LieModel,
}

impl ConstantCurvatureUT {
    pub fn new(kappa: f64) -> Self {
        let model = LieModel::from_brackets(
            &["X", "Y", "Z"],
            &[(2, 0, &[(1, 1.0)]), (2, 1, &[(0, -1.0)]), (0, 1, &[(2, kappa)])],
            Some(kappa),
        )
        .expect("three-dimensional constants are well formed");
        Self { kappa, model }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionKind {
    Product,
    Magnetic,
}

/// What the extension is built over.
#[derive(Clone, Debug)]
pub enum ExtensionBase {
    Lie(ConstantCurvatureUT),
    Chart(ConformalSurface),
}

/// A Lorentzian 3-manifold together with the 4-frame on its null-circle
/// bundle used by the Lorentz prolongation.
///
/// Frame order is `(X, Y, Z, Θ)` for the product kind and
/// `(X̃, Ỹ, Z̃, Θ)` for the magnetic kind.
#[derive(Clone, Debug)]
pub struct LorentzExtension {
    pub kind: ExtensionKind,
    pub base: ExtensionBase,
    pub frame: FrameModel,
}

impl LorentzExtension {
    /// Metric of the 3-manifold in its orthonormal frame:
    /// `(horizontal, horizontal, S¹ or vertical)`.
    pub fn frame_metric(&self, _p: &[f64]) -> Matrix3<f64> {
        Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, -1.0))
    }

    /// Whether the frame metric has signature `(+,+,−)` at `p`.
    pub fn signature_ok(&self, p: &[f64]) -> bool {
        let eig = self.frame_metric(p).symmetric_eigenvalues();
        let pos = eig.iter().filter(|&&e| e > 0.0).count();
        let neg = eig.iter().filter(|&&e| e < 0.0).count();
        pos == 2 && neg == 1
    }

    /// Curvature of the base at a 4-manifold point (first two chart coordinates).
    pub fn kappa_at(&self, p: &[f64]) -> f64 {
        match &self.base {
            ExtensionBase::Lie(ut) => ut.kappa,
            ExtensionBase::Chart(s) => s.curvature(p[0], p[1]),
        }
    }

    pub fn constant_kappa(&self) -> Option<f64> {
        match &self.base {
            ExtensionBase::Lie(ut) => Some(ut.kappa),
            ExtensionBase::Chart(s) => s.constant_curvature,
        }
    }

    pub fn surface(&self) -> Option<&ConformalSurface> {
        match &self.base {
            ExtensionBase::Chart(s) => Some(s),
            ExtensionBase::Lie(_) => None,
        }
    }

    /// Metric of the 3-manifold in coordinates: `(x, y, θ)` for the product
    /// kind, `(x, y, φ)` for the magnetic kind. Chart bases only.
    pub fn coordinate_metric(&self, x: f64, y: f64, phi: f64) -> Option<Matrix3<f64>> {
        let s = self.surface()?;
        match self.kind {
            ExtensionKind::Product => {
                let l = s.lambda(x, y);
                Some(Matrix3::from_diagonal(&nalgebra::Vector3::new(l, l, -1.0)))
            }
            ExtensionKind::Magnetic => {
                let (xv, yv) = horizontal_xy(s, x, y, phi);
                let f = Matrix3::from_columns(&[
                    nalgebra::Vector3::from(xv),
                    nalgebra::Vector3::from(yv),
                    nalgebra::Vector3::new(0.0, 0.0, 1.0),
                ]);
                let finv = f.try_inverse()?;
                Some(finv.transpose() * self.frame_metric(&[]) * finv)
            }
        }
    }
}

/// `(X, Y, Z, Θ)` with `Θ` central.
pub fn product_lie(ut: &ConstantCurvatureUT) -> LieModel {
    let k = ut.kappa;
    LieModel::from_brackets(
        &["X", "Y", "Z", "Theta"],
        &[(2, 0, &[(1, 1.0)]), (2, 1, &[(0, -1.0)]), (0, 1, &[(2, k)])],
        Some(k),
    )
    .expect("well formed")
}

/// `(X̃, Ỹ, Z̃, Θ)` with `Θ` rotating the horizontal pair.
pub fn magnetic_lie(ut: &ConstantCurvatureUT) -> LieModel {
    let k = ut.kappa;
    LieModel::from_brackets(
        &["Xt", "Yt", "Zt", "Theta"],
        &[
            (2, 0, &[(1, 1.0)]),
            (2, 1, &[(0, -1.0)]),
            (0, 1, &[(2, k)]),
            (3, 0, &[(1, 1.0)]),
            (3, 1, &[(0, -1.0)]),
        ],
        Some(k),
    )
    .expect("well formed")
}

fn lift_to_theta(f3: &ChartVectorField, dom4: &Arc<crate::frame::ChartDomain>) -> ChartVectorField {
    let f3 = f3.clone();
    ChartVectorField::new(dom4, move |p| {
        let v = f3.eval_unchecked(&p[..3]).unwrap_or_else(|_| DVector::from_element(3, f64::NAN));
        DVector::from_vec(vec![v[0], v[1], v[2], 0.0])
    })
}

/// Product extension `(Σ, h) × (S¹, −dθ²)`.
pub fn product_extension(base: ExtensionBase) -> LorentzExtension {
    let frame = match &base {
        ExtensionBase::Lie(ut) => FrameModel::Lie(Arc::new(product_lie(ut))),
        ExtensionBase::Chart(s) => {
            let ut = unit_tangent_frames(s);
            let dom = ut_domain(s, true);
            let mut fields: Vec<ChartVectorField> = ut.fields.iter().map(|f| lift_to_theta(f, &dom)).collect();
            fields[2] = ChartVectorField::coordinate(&dom, 2);
            fields.push(ChartVectorField::coordinate(&dom, 3));
            FrameModel::Chart(ChartFrame {
                domain: dom,
                names: vec!["X".into(), "Y".into(), "Z".into(), "Theta".into()],
                fields,
            })
        }
    };
    LorentzExtension { kind: ExtensionKind::Product, base, frame }
}

/// Magnetic extension: `h ⊕ (−dθ²)` across the horizontal/vertical
/// splitting of the unit tangent bundle, with null directions `X̃ + Z̃`
/// where `X̃ = cosθ X + sinθ Y`.
pub fn magnetic_extension(base: ExtensionBase) -> LorentzExtension {
    let frame = match &base {
        ExtensionBase::Lie(ut) => FrameModel::Lie(Arc::new(magnetic_lie(ut))),
        ExtensionBase::Chart(s) => {
            let dom = ut_domain(s, true);
            let (s1, s2) = (s.clone(), s.clone());
            let xt = ChartVectorField::new(&dom, move |p| {
                let (x, y) = horizontal_xy(&s1, p[0], p[1], p[2]);
                let (sn, cs) = p[3].sin_cos();
                DVector::from_vec(vec![cs * x[0] + sn * y[0], cs * x[1] + sn * y[1], cs * x[2] + sn * y[2], 0.0])
            });
            let yt = ChartVectorField::new(&dom, move |p| {
                let (x, y) = horizontal_xy(&s2, p[0], p[1], p[2]);
                let (sn, cs) = p[3].sin_cos();
                DVector::from_vec(vec![-sn * x[0] + cs * y[0], -sn * x[1] + cs * y[1], -sn * x[2] + cs * y[2], 0.0])
            });
            FrameModel::Chart(ChartFrame {
                domain: dom.clone(),
                names: vec!["Xt".into(), "Yt".into(), "Zt".into(), "Theta".into()],
                fields: vec![
                    xt,
                    yt,
                    ChartVectorField::coordinate(&dom, 2),
                    ChartVectorField::coordinate(&dom, 3),
                ],
            })
        }
    };
    LorentzExtension { kind: ExtensionKind::Magnetic, base, frame }
}

/// Check the `(+,+,−)` signature at the given points.
pub fn check_signature(ext: &LorentzExtension, points: &[Vec<f64>]) -> Result<()> {
    if points.iter().all(|p| ext.signature_ok(p)) {
        Ok(())
    } else {
        Err(EngelError::SignatureError)
    }
}
