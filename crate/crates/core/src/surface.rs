//! Surfaces with conformal metrics `λ(dx² + dy²)`, their curvature, and the
//! orthonormal frame `(X, Y, Z)` of the unit tangent bundle.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{EngelError, Result};
use crate::frame::{ChartDomain, ChartFrame, ChartVectorField, Coord};

type Scalar2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type Grad2 = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// Step for second differences of `σ` when no analytic Laplacian is given.
const LAPLACE_STEP: f64 = 1e-4;
const GRAD_STEP: f64 = 1e-6;

/// A conformal chart with metric `λ(dx² + dy²)`, stored through `σ = ½ log λ`.
#[derive(Clone)]
pub struct ConformalSurface {
    pub name: String,
    /// Chart box `[(x_lo, x_hi), (y_lo, y_hi)]`.
    pub chart: [(f64, f64); 2],
    /// Sub-box used for sampling.
    pub sample_box: [(f64, f64); 2],
    sigma: Scalar2,
    grad: Option<Grad2>,
    laplacian: Option<Scalar2>,
    /// Curvature when it is known to be constant.
    pub constant_curvature: Option<f64>,
}

impl fmt::Debug for ConformalSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalSurface")
            .field("name", &self.name)
            .field("chart", &self.chart)
            .field("analytic", &(self.grad.is_some(), self.laplacian.is_some()))
            .finish()
    }
}

impl ConformalSurface {
    pub fn new(
        name: &str,
        chart: [(f64, f64); 2],
        sigma: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            chart,
            sample_box: chart,
            sigma: Arc::new(sigma),
            grad: None,
            laplacian: None,
            constant_curvature: None,
        }
    }

    pub fn with_derivatives(
        mut self,
        grad: impl Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
        laplacian: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self.laplacian = Some(Arc::new(laplacian));
        self
    }

    pub fn with_sample_box(mut self, b: [(f64, f64); 2]) -> Self {
        self.sample_box = b;
        self
    }

    /// Drop the analytic derivatives so every derivative goes through finite differences.
    pub fn numeric_only(&self) -> Self {
        let mut s = self.clone();
        s.grad = None;
        s.laplacian = None;
        s
    }

    /// `λ ≡ 1`.
    pub fn flat() -> Self {
        let mut s = Self::new("flat", [(-10.0, 10.0), (-10.0, 10.0)], |_, _| 0.0)
            .with_derivatives(|_, _| (0.0, 0.0), |_, _| 0.0)
            .with_sample_box([(-1.0, 1.0), (-1.0, 1.0)]);
        s.constant_curvature = Some(0.0);
        s
    }

    /// Stereographic chart of the round sphere of curvature `κ > 0`:
    /// `λ = 4 / (κ (1 + r²)²)`.
    pub fn sphere(kappa: f64) -> Result<Self> {
        if kappa <= 0.0 || !kappa.is_finite() {
            return Err(EngelError::InvalidParameter(format!("sphere needs κ > 0, got {kappa}")));
        }
        let c = 0.5 * (4.0 / kappa).ln();
        let mut s = Self::new("sphere", [(-2.0, 2.0), (-2.0, 2.0)], move |x, y| c - (1.0 + x * x + y * y).ln())
            .with_derivatives(
                |x, y| {
                    let q = 1.0 + x * x + y * y;
                    (-2.0 * x / q, -2.0 * y / q)
                },
                |x, y| {
                    let q = 1.0 + x * x + y * y;
                    -4.0 / (q * q)
                },
            )
            .with_sample_box([(-1.0, 1.0), (-1.0, 1.0)]);
        s.constant_curvature = Some(kappa);
        Ok(s)
    }

    /// Poincaré disk of curvature `κ < 0`: `λ = 4 / (|κ| (1 − r²)²)`.
    pub fn poincare(kappa: f64) -> Result<Self> {
        if kappa >= 0.0 || !kappa.is_finite() {
            return Err(EngelError::InvalidParameter(format!("Poincaré disk needs κ < 0, got {kappa}")));
        }
        let c = 0.5 * (4.0 / kappa.abs()).ln();
        let mut s = Self::new("poincare", [(-0.85, 0.85), (-0.85, 0.85)], move |x, y| {
            c - (1.0 - x * x - y * y).ln()
        })
        .with_derivatives(
            |x, y| {
                let q = 1.0 - x * x - y * y;
                (2.0 * x / q, 2.0 * y / q)
            },
            |x, y| {
                let q = 1.0 - x * x - y * y;
                4.0 / (q * q)
            },
        )
        .with_sample_box([(-0.5, 0.5), (-0.5, 0.5)]);
        s.constant_curvature = Some(kappa);
        Ok(s)
    }

    /// Radial bump `λ = exp(a·exp(−r²))` with curvature varying in sign.
    pub fn bump(amplitude: f64) -> Self {
        let a = amplitude;
        Self::new("bump", [(-3.0, 3.0), (-3.0, 3.0)], move |x, y| 0.5 * a * (-(x * x + y * y)).exp())
            .with_derivatives(
                move |x, y| {
                    let e = (-(x * x + y * y)).exp();
                    (-a * x * e, -a * y * e)
                },
                move |x, y| {
                    let r2 = x * x + y * y;
                    2.0 * a * (-r2).exp() * (r2 - 1.0)
                },
            )
            .with_sample_box([(-1.5, 1.5), (-1.5, 1.5)])
    }

    /// Tensor-product cubic (Catmull-Rom) interpolation of tabulated `λ`
    /// on a uniform grid; `values[i][j]` is `λ(x_i, y_j)`.
    pub fn from_table(name: &str, x_range: (f64, f64), y_range: (f64, f64), values: Vec<Vec<f64>>) -> Result<Self> {
        let nx = values.len();
        let ny = values.first().map_or(0, |r| r.len());
        if nx < 4 || ny < 4 || values.iter().any(|r| r.len() != ny) {
            return Err(EngelError::InvalidParameter("table needs a rectangular grid of at least 4×4".into()));
        }
        if values.iter().flatten().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(EngelError::InvalidParameter("conformal factor must be positive and finite".into()));
        }
        let sig: Vec<Vec<f64>> = values.iter().map(|r| r.iter().map(|v| 0.5 * v.ln()).collect()).collect();
        let hx = (x_range.1 - x_range.0) / (nx - 1) as f64;
        let hy = (y_range.1 - y_range.0) / (ny - 1) as f64;
        let f = move |x: f64, y: f64| {
            let u = ((x - x_range.0) / hx).clamp(0.0, (nx - 1) as f64);
            let v = ((y - y_range.0) / hy).clamp(0.0, (ny - 1) as f64);
            let i = (u.floor() as usize).min(nx - 2);
            let j = (v.floor() as usize).min(ny - 2);
            let (fu, fv) = (u - i as f64, v - j as f64);
            let at = |a: isize, b: isize| {
                let ia = (i as isize + a).clamp(0, nx as isize - 1) as usize;
                let jb = (j as isize + b).clamp(0, ny as isize - 1) as usize;
                sig[ia][jb]
            };
            let mut rows = [0.0; 4];
            for (k, a) in (-1..=2).enumerate() {
                rows[k] = catmull_rom([at(a, -1), at(a, 0), at(a, 1), at(a, 2)], fv);
            }
            catmull_rom(rows, fu)
        };
        // Keep one cell of margin so the interpolant stays smooth under the stencils.
        let chart = [(x_range.0 + hx, x_range.1 - hx), (y_range.0 + hy, y_range.1 - hy)];
        Ok(Self::new(name, chart, f))
    }

    pub fn sigma(&self, x: f64, y: f64) -> f64 {
        (self.sigma)(x, y)
    }

    pub fn lambda(&self, x: f64, y: f64) -> f64 {
        (2.0 * self.sigma(x, y)).exp()
    }

    pub fn in_chart(&self, x: f64, y: f64) -> bool {
        (self.chart[0].0..=self.chart[0].1).contains(&x) && (self.chart[1].0..=self.chart[1].1).contains(&y)
    }

    pub fn grad_sigma(&self, x: f64, y: f64) -> (f64, f64) {
        match &self.grad {
            Some(g) => g(x, y),
            None => {
                let h = GRAD_STEP;
                (
                    (self.sigma(x + h, y) - self.sigma(x - h, y)) / (2.0 * h),
                    (self.sigma(x, y + h) - self.sigma(x, y - h)) / (2.0 * h),
                )
            }
        }
    }

    pub fn laplacian_sigma(&self, x: f64, y: f64) -> f64 {
        match &self.laplacian {
            Some(l) => l(x, y),
            None => {
                let h = LAPLACE_STEP;
                let c = self.sigma(x, y);
                (self.sigma(x + h, y) + self.sigma(x - h, y) + self.sigma(x, y + h) + self.sigma(x, y - h)
                    - 4.0 * c)
                    / (h * h)
            }
        }
    }

    /// Gaussian curvature at a chart point.
    pub fn curvature(&self, x: f64, y: f64) -> f64 {
        -(-2.0 * self.sigma(x, y)).exp() * self.laplacian_sigma(x, y)
    }
}

fn catmull_rom(p: [f64; 4], t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * ((2.0 * p[1])
        + (-p[0] + p[2]) * t
        + (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * t2
        + (-p[0] + 3.0 * p[1] - 3.0 * p[2] + p[3]) * t3)
}

/// `κ = −Δ(log λ) / (2λ)` at `p = (x, y)`.
pub fn gauss_curvature(s: &ConformalSurface, p: &[f64]) -> Result<f64> {
    if p.len() < 2 {
        return Err(EngelError::DimensionMismatch { expected: 2, got: p.len() });
    }
    if !s.in_chart(p[0], p[1]) {
        return Err(EngelError::DomainViolation { point: p.to_vec() });
    }
    let k = s.curvature(p[0], p[1]);
    if !k.is_finite() {
        return Err(EngelError::NonFiniteEvaluation { point: p.to_vec() });
    }
    Ok(k)
}

/// Components of the horizontal fields `X`, `Y` at `(x, y, φ)`.
pub(crate) fn horizontal_xy(s: &ConformalSurface, x: f64, y: f64, phi: f64) -> ([f64; 3], [f64; 3]) {
    let e = (-s.sigma(x, y)).exp();
    let (sx, sy) = s.grad_sigma(x, y);
    let (sn, cs) = phi.sin_cos();
    (
        [e * cs, e * sn, e * (sy * cs - sx * sn)],
        [-e * sn, e * cs, -e * (sx * cs + sy * sn)],
    )
}

/// Chart domain `(x, y, φ)` for the unit tangent bundle, optionally with an
/// extra circle coordinate `θ`.
pub(crate) fn ut_domain(s: &ConformalSurface, with_theta: bool) -> Arc<ChartDomain> {
    let mut names = vec!["x", "y", "phi"];
    let mut coords = vec![
        Coord::Interval { lo: s.chart[0].0, hi: s.chart[0].1 },
        Coord::Interval { lo: s.chart[1].0, hi: s.chart[1].1 },
        Coord::Periodic { period: 2.0 * PI },
    ];
    let mut sample = vec![s.sample_box[0], s.sample_box[1], (0.0, 2.0 * PI)];
    if with_theta {
        names.push("theta");
        coords.push(Coord::Periodic { period: 2.0 * PI });
        sample.push((0.0, 2.0 * PI));
    }
    ChartDomain::new(&names, coords, sample)
}

/// The frame `X` (geodesic spray), `Y` (its rotation by π/2) and `Z = ∂φ`
/// on the chart `(x, y, φ)` of the unit tangent bundle.
pub fn unit_tangent_frames(s: &ConformalSurface) -> ChartFrame {
    let dom = ut_domain(s, false);
    let (sx, sy) = (s.clone(), s.clone());
    let x = ChartVectorField::new(&dom, move |p| DVector::from_row_slice(&horizontal_xy(&sx, p[0], p[1], p[2]).0));
    let y = ChartVectorField::new(&dom, move |p| DVector::from_row_slice(&horizontal_xy(&sy, p[0], p[1], p[2]).1));
    let z = ChartVectorField::coordinate(&dom, 2);
    ChartFrame {
        domain: dom,
        names: vec!["X".into(), "Y".into(), "Z".into()],
        fields: vec![x, y, z],
    }
}

/// Declarative surface description, as read from run manifests.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceSpec {
    Flat,
    Sphere { kappa: f64 },
    Poincare { kappa: f64 },
    Bump { amplitude: f64 },
    Table {
        x_range: (f64, f64),
        y_range: (f64, f64),
        lambda: Vec<Vec<f64>>,
    },
}

impl SurfaceSpec {
    pub fn build(&self) -> Result<ConformalSurface> {
        match self {
            SurfaceSpec::Flat => Ok(ConformalSurface::flat()),
            SurfaceSpec::Sphere { kappa } => ConformalSurface::sphere(*kappa),
            SurfaceSpec::Poincare { kappa } => ConformalSurface::poincare(*kappa),
            SurfaceSpec::Bump { amplitude } => Ok(ConformalSurface::bump(*amplitude)),
            SurfaceSpec::Table { x_range, y_range, lambda } => {
                ConformalSurface::from_table("table", *x_range, *y_range, lambda.clone())
            }
        }
    }

    /// Constant-curvature chart for any real `κ`.
    pub fn constant(kappa: f64) -> Self {
        if kappa > 0.0 {
            SurfaceSpec::Sphere { kappa }
        } else if kappa < 0.0 {
            SurfaceSpec::Poincare { kappa }
        } else {
            SurfaceSpec::Flat
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::bracket_chart;
    use crate::numeric::NumericConfig;

    #[test]
    fn constant_curvature_catalog() {
        let sphere = ConformalSurface::sphere(1.0).unwrap();
        let disk = ConformalSurface::poincare(-1.0).unwrap();
        let flat = ConformalSurface::flat();
        for p in crate::numeric::halton_points(2, 50, 3) {
            let (x, y) = (p[0] - 0.5, p[1] - 0.5);
            assert!((gauss_curvature(&sphere, &[x, y]).unwrap() - 1.0).abs() < 1e-12);
            assert!((gauss_curvature(&disk, &[x, y]).unwrap() + 1.0).abs() < 1e-12);
            assert_eq!(gauss_curvature(&flat, &[x, y]).unwrap(), 0.0);
        }
    }

    #[test]
    fn finite_difference_curvature_agrees() {
        // Symbolic oracle: for λ = 4/(1+r²)², log λ = log 4 − 2 log(1+r²),
        // Δ log λ = −8/(1+r²)², so κ = 8/(1+r²)² · (1+r²)²/8 = 1.
        let sphere = ConformalSurface::sphere(1.0).unwrap().numeric_only();
        let disk = ConformalSurface::poincare(-1.0).unwrap().numeric_only();
        for p in crate::numeric::halton_points(2, 50, 3) {
            let (x, y) = (1.6 * (p[0] - 0.5), 1.6 * (p[1] - 0.5));
            assert!((gauss_curvature(&sphere, &[x, y]).unwrap() - 1.0).abs() < 1e-6);
            let (x, y) = (0.8 * x, 0.8 * y);
            assert!((gauss_curvature(&disk, &[x, y]).unwrap() + 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn bump_curvature_matches_numeric() {
        let b = ConformalSurface::bump(0.7);
        let n = b.numeric_only();
        for &(x, y) in &[(0.0, 0.0), (0.4, -0.3), (1.2, 0.8)] {
            assert!((b.curvature(x, y) - n.curvature(x, y)).abs() < 1e-6);
        }
        assert!(b.curvature(0.0, 0.0) > 0.0);
        assert!(b.curvature(1.5, 0.0) < 0.0);
    }

    #[test]
    fn table_surface_reproduces_smooth_factor() {
        let n = 81;
        let (lo, hi) = (-1.0, 1.0);
        let h = (hi - lo) / (n - 1) as f64;
        let vals: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let (x, y) = (lo + i as f64 * h, lo + j as f64 * h);
                        (0.3 * (-(x * x + y * y)).exp()).exp()
                    })
                    .collect()
            })
            .collect();
        let t = ConformalSurface::from_table("t", (lo, hi), (lo, hi), vals).unwrap();
        let b = ConformalSurface::bump(0.3);
        assert!((t.sigma(0.33, -0.21) - b.sigma(0.33, -0.21)).abs() < 1e-5);
        assert!((t.curvature(0.2, 0.1) - b.curvature(0.2, 0.1)).abs() < 5e-2);
    }

    fn frame_brackets(s: &ConformalSurface, p: &[f64]) -> (DVector<f64>, DVector<f64>, DVector<f64>, f64) {
        let fr = unit_tangent_frames(s);
        let cfg = NumericConfig::default();
        let (x, y, z) = (&fr.fields[0], &fr.fields[1], &fr.fields[2]);
        let zx = bracket_chart(z, x, p, &cfg).unwrap() - y.eval(p).unwrap();
        let zy = bracket_chart(z, y, p, &cfg).unwrap() + x.eval(p).unwrap();
        let kappa = s.curvature(p[0], p[1]);
        let xy = bracket_chart(x, y, p, &cfg).unwrap() - z.eval(p).unwrap() * kappa;
        (zx, zy, xy, kappa)
    }

    #[test]
    fn unit_tangent_commutation_relations() {
        let surfaces = [
            ConformalSurface::flat(),
            ConformalSurface::sphere(1.0).unwrap(),
            ConformalSurface::poincare(-1.0).unwrap(),
            ConformalSurface::bump(0.8),
        ];
        for s in &surfaces {
            for p in ut_domain(s, false).sample(40, 7) {
                let (zx, zy, xy, _) = frame_brackets(s, &p);
                assert!(zx.amax() < 1e-6, "{}: [Z,X]-Y = {zx}", s.name);
                assert!(zy.amax() < 1e-6, "{}: [Z,Y]+X = {zy}", s.name);
                assert!(xy.amax() < 1e-5, "{}: [X,Y]-κZ = {xy}", s.name);
            }
        }
    }

    #[test]
    fn flat_frame_is_the_rotating_coordinate_frame() {
        let fr = unit_tangent_frames(&ConformalSurface::flat());
        let p = [0.3, 0.2, 0.9];
        let x = fr.fields[0].eval(&p).unwrap();
        let y = fr.fields[1].eval(&p).unwrap();
        assert!((x - DVector::from_vec(vec![0.9f64.cos(), 0.9f64.sin(), 0.0])).amax() < 1e-15);
        assert!((y - DVector::from_vec(vec![-(0.9f64.sin()), 0.9f64.cos(), 0.0])).amax() < 1e-15);
    }

    #[test]
    fn curvature_is_translation_invariant_for_flat_factor() {
        let s = ConformalSurface::new("shifted", [(-5.0, 5.0), (-5.0, 5.0)], |x, _| 0.1 * x);
        // σ linear in x has Δσ = 0 regardless of where it is evaluated.
        for x in [-2.0, 0.0, 3.0] {
            assert!(gauss_curvature(&s, &[x, 1.0]).unwrap().abs() < 1e-6);
        }
    }
}
