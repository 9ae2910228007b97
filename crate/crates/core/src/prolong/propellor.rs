//! Torus propellors: a plane field `ξ = ⟨a∂x + b∂y, ∂t⟩` on the mapping
//! torus of a unimodular `φ`, with the line `(a, b)` rotating monotonically
//! and transforming under `φ` from one end to the other.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::{DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::prequantum::{horizontal_lift, OneForm};
use super::{with_fiber, ContactModel, PrequantumData};
use crate::engel::{EngelStructure, Provenance};
use crate::error::{EngelError, Result};
use crate::frame::{ChartDomain, ChartVectorField, Coord, Section};
use crate::numeric::{gauss_legendre, integrate_gl};

pub type LinePath = Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>;
pub type MatrixPath = Arc<dyn Fn(f64) -> Matrix2<f64> + Send + Sync>;

/// Which vector field on the base is prolonged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropellorVariant {
    /// `w̄ = ∂t`: the plane rotates along the characteristic.
    RotatingPlane,
    /// `w̄ = a∂x + b∂y`: the Legendrian field itself is prolonged.
    InvariantField,
}

const EQUIVARIANCE_TOL: f64 = 1e-9;

fn to_matrix(m: [[i64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64)
}

fn rotation(a: f64) -> Matrix2<f64> {
    let (s, c) = a.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Real logarithm of an `SL(2,ℝ)` matrix with trace `> −2` (or `−I` excluded).
fn real_log(m: &Matrix2<f64>) -> Option<Matrix2<f64>> {
    let tr = m.trace();
    let id = Matrix2::identity();
    if (m - id).amax() < 1e-14 {
        return Some(Matrix2::zeros());
    }
    if (tr - 2.0).abs() < 1e-12 {
        return Some(m - id);
    }
    if tr > 2.0 {
        let disc = (tr * tr / 4.0 - 1.0).sqrt();
        let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
        // Sylvester: log M = (ln l1 (M − l2 I) − ln l2 (M − l1 I)) / (l1 − l2)
        return Some(((m - id * l2) * l1.ln() - (m - id * l1) * l2.ln()) / (l1 - l2));
    }
    if tr.abs() < 2.0 {
        let th = (tr / 2.0).acos();
        let j = (m - id * th.cos()) / th.sin();
        return Some(j * th);
    }
    None
}

/// A path `P(t)` of invertible matrices with `P(0) = I` and
/// `P(t + 1) = φ P(t)`, used as a frame on the torus fibers that descends to
/// the mapping torus.
pub fn periodic_frame(monodromy: [[i64; 2]; 2]) -> Result<MatrixPath> {
    let m = to_matrix(monodromy);
    if (m.determinant() - 1.0).abs() > 1e-12 {
        return Err(EngelError::InvalidParameter("monodromy must have determinant 1".into()));
    }
    if let Some(l) = real_log(&m) {
        return Ok(Arc::new(move |t| (l * t).exp()));
    }
    // trace ≤ −2: φ = −exp(L') and P(t) = exp(tL')R(πt).
    let l = real_log(&(-m)).ok_or_else(|| EngelError::InvalidParameter("no real logarithm".into()))?;
    Ok(Arc::new(move |t| (l * t).exp() * rotation(PI * t)))
}

/// The line path `v(t) = P(t)v₀`; equivariant by construction.
pub fn equivariant_line(monodromy: [[i64; 2]; 2], v0: [f64; 2]) -> Result<LinePath> {
    let p = periodic_frame(monodromy)?;
    Ok(Arc::new(move |t| {
        let v = p(t) * Vector2::new(v0[0], v0[1]);
        [v[0], v[1]]
    }))
}

/// Initial vector between the eigenlines of a hyperbolic monodromy making
/// `P(t)v₀` rotate counterclockwise.
pub fn hyperbolic_seed(monodromy: [[i64; 2]; 2]) -> Result<[f64; 2]> {
    let m = to_matrix(monodromy);
    let tr = m.trace();
    if tr.abs() <= 2.0 {
        return Err(EngelError::InvalidParameter("monodromy is not hyperbolic".into()));
    }
    let disc = (tr * tr / 4.0 - 1.0).sqrt();
    let eig = |l: f64| {
        let v = if m[(0, 1)].abs() > 1e-12 {
            Vector2::new(m[(0, 1)], l - m[(0, 0)])
        } else {
            Vector2::new(l - m[(1, 1)], m[(1, 0)])
        };
        v.normalize()
    };
    let (eu, es) = (eig(tr / 2.0 + disc), eig(tr / 2.0 - disc));
    let orient = eu[0] * es[1] - eu[1] * es[0];
    let v = eu - es * orient.signum();
    Ok([v[0], v[1]])
}

/// Largest `|v(t+1) − φ v(t)|` over a grid of `[0, 1]`.
pub fn equivariance_defect(monodromy: [[i64; 2]; 2], line: &LinePath) -> f64 {
    let m = to_matrix(monodromy);
    (0..=32)
        .map(|i| {
            let t = i as f64 / 32.0;
            let a = line(t);
            let b = line(t + 1.0);
            let mv = m * Vector2::new(a[0], a[1]);
            (Vector2::new(b[0], b[1]) - mv).amax() / (1.0 + mv.amax())
        })
        .fold(0.0, f64::max)
}

/// Angular velocity `det(v, v′)/|v|²` of the line path at `t`.
pub fn angular_velocity(line: &LinePath, t: f64) -> f64 {
    let h = 1e-5;
    let (a, b, c) = (line(t), line(t + h), line(t - h));
    let d = [(b[0] - c[0]) / (2.0 * h), (b[1] - c[1]) / (2.0 * h)];
    (a[0] * d[1] - a[1] * d[0]) / (a[0] * a[0] + a[1] * a[1])
}

fn propellor_chart() -> Arc<ChartDomain> {
    ChartDomain::new(
        &["x", "y", "t"],
        vec![
            Coord::Interval { lo: -50.0, hi: 50.0 },
            Coord::Interval { lo: -50.0, hi: 50.0 },
            Coord::Interval { lo: -2.0, hi: 3.0 },
        ],
        vec![(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
    )
}

/// `∫₀ᵗ f` by 16-point Gauss-Legendre on four panels.
fn primitive(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    integrate_gl(f, 0.0, t, RULE.get_or_init(|| gauss_legendre(16)), 4)
}

/// Contact model on the mapping-torus chart plus its pre-quantum Engel structure.
pub fn propellor_structure(
    monodromy: [[i64; 2]; 2],
    line: LinePath,
    variant: PropellorVariant,
) -> Result<(ContactModel, EngelStructure)> {
    let frame = periodic_frame(monodromy)?;
    let defect = equivariance_defect(monodromy, &line);
    if defect > EQUIVARIANCE_TOL {
        return Err(EngelError::EquivarianceError { defect });
    }
    let omegas: Vec<f64> = (0..=64).map(|i| angular_velocity(&line, i as f64 / 64.0)).collect();
    let positive = omegas.iter().all(|&w| w > 1e-9);
    let negative = omegas.iter().all(|&w| w < -1e-9);
    if !(positive || negative) {
        return Err(EngelError::NotContact { point: vec![] });
    }

    let dom = propellor_chart();
    let (l0, l1) = (line.clone(), line.clone());
    let xi0 = ChartVectorField::new(&dom, move |p| {
        let v = l0(p[2]);
        DVector::from_vec(vec![v[0], v[1], 0.0])
    });
    let normal = ChartVectorField::new(&dom, move |p| {
        let v = l1(p[2]);
        DVector::from_vec(vec![-v[1], v[0], 0.0])
    });
    let dt = ChartVectorField::coordinate(&dom, 2);
    let contact = ContactModel {
        name: "propellor".into(),
        domain: dom.clone(),
        xi: [xi0.clone(), dt.clone()],
        reeb: normal,
        legendrian: None,
    };

    let (w_bar, beta): (ChartVectorField, OneForm) = match variant {
        PropellorVariant::RotatingPlane => (dt, Arc::new(|p: &[f64]| [-p[1], 0.0, 0.0])),
        PropellorVariant::InvariantField => {
            let l = line.clone();
            let beta: OneForm = Arc::new(move |p: &[f64]| {
                let a = primitive(|s| l(s)[0], p[2]);
                let b = primitive(|s| l(s)[1], p[2]);
                [b, -a, 0.0]
            });
            (xi0, beta)
        }
    };
    let data = PrequantumData {
        contact: contact.clone(),
        w_bar,
        vol: Arc::new(|_| 1.0),
        beta: beta.clone(),
    };
    let mut s = super::prequantum_prolongation(&data)?;
    s.name = format!("propellor-{variant:?}").to_lowercase();
    s.provenance = Provenance::Propellor { monodromy };
    s.flow_period = Some(1.0);
    if variant == PropellorVariant::RotatingPlane {
        let dom4 = with_fiber(&dom, "theta", Coord::Periodic { period: 2.0 * PI }, (0.0, 2.0 * PI));
        let cols: Vec<Section> = (0..2)
            .map(|i| {
                let f = frame.clone();
                let col = ChartVectorField::new(&dom, move |p| {
                    let m = f(p[2]);
                    DVector::from_vec(vec![m[(0, i)], m[(1, i)], 0.0])
                });
                Section::Chart(horizontal_lift(&col, &beta, &dom4))
            })
            .collect();
        s.quotient_frame = [cols[0].clone(), cols[1].clone()];
    }
    Ok((contact, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engel::verify_engel;

    #[test]
    fn periodic_frames_satisfy_the_gluing_rule() {
        for m in [[[2, 1], [1, 1]], [[1, 1], [0, 1]], [[0, -1], [1, 0]], [[-1, 0], [0, -1]], [[-2, 1], [-1, 0]], [[-3, 1], [-1, 0]]] {
            let p = periodic_frame(m).unwrap();
            let phi = to_matrix(m);
            assert!((p(0.0) - Matrix2::identity()).amax() < 1e-12);
            for t in [0.0, 0.3, 0.77] {
                assert!((p(t + 1.0) - phi * p(t)).amax() < 1e-9, "{m:?}");
            }
        }
    }

    #[test]
    fn cat_seed_rotates_positively() {
        let m = [[2, 1], [1, 1]];
        let line = equivariant_line(m, hyperbolic_seed(m).unwrap()).unwrap();
        for i in 0..20 {
            assert!(angular_velocity(&line, -1.0 + 0.15 * i as f64) > 0.0);
        }
    }

    #[test]
    fn presets_verify() {
        let cat = [[2, 1], [1, 1]];
        let paths: Vec<([[i64; 2]; 2], LinePath)> = vec![
            (cat, equivariant_line(cat, hyperbolic_seed(cat).unwrap()).unwrap()),
            ([[1, 1], [0, 1]], equivariant_line([[1, 1], [0, 1]], [0.0, 1.0]).unwrap()),
            ([[1, 0], [0, 1]], Arc::new(|t: f64| [(2.0 * PI * t).cos(), (2.0 * PI * t).sin()])),
        ];
        for (m, line) in paths {
            for variant in [PropellorVariant::RotatingPlane, PropellorVariant::InvariantField] {
                let (_, s) = propellor_structure(m, line.clone(), variant).unwrap();
                let r = verify_engel(&s, 100, 1e-8).unwrap();
                assert!(r.summary.pass, "{m:?} {variant:?}: {:?}", r.points.iter().find(|p| !p.passed));
            }
        }
    }

    #[test]
    fn non_equivariant_path_is_rejected() {
        let line: LinePath = Arc::new(|t: f64| [(PI * t).cos(), (PI * t).sin()]);
        let err = propellor_structure([[2, 1], [1, 1]], line, PropellorVariant::RotatingPlane).unwrap_err();
        assert!(matches!(err, EngelError::EquivarianceError { .. }));
    }
}
