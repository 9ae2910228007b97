use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::orbit::{characteristic_orbit, det_normalized, integrate_characteristic, OrbitTrace};
use crate::engel::EngelStructure;
use crate::error::{EngelError, Result};
use crate::frame::{Coord, FrameModel};
use crate::numeric::rk4_step;

/// Default half-width of the band `||tr| − 2| ≤ tol`.
pub const CLASSIFY_TOL: f64 = 1e-6;
/// Chart distance below which an orbit counts as closed.
pub const CLOSE_TOL: f64 = 1e-6;

/// First-return data of a closed orbit as an element of the universal
/// cover of `PSL(2,ℝ)`: the matrix acting on `P(E/W)` together with the
/// lifted displacement `winding` of the line at angle `base_angle`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyLift {
    pub matrix: [[f64; 2]; 2],
    pub base_angle: f64,
    pub winding: f64,
}

impl HolonomyLift {
    /// Normalizes the matrix to determinant one.
    pub fn new(matrix: Matrix2<f64>, base_angle: f64, winding: f64) -> Result<Self> {
        let det = matrix.determinant();
        if det <= 0.0 || !det.is_finite() {
            return Err(EngelError::InvalidParameter(format!("holonomy must preserve orientation (det {det})")));
        }
        let m = det_normalized(&matrix);
        Ok(Self {
            matrix: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
            base_angle,
            winding,
        })
    }

    pub fn mat(&self) -> Matrix2<f64> {
        Matrix2::new(self.matrix[0][0], self.matrix[0][1], self.matrix[1][0], self.matrix[1][1])
    }

    /// Lift of the endpoint of a path `s ↦ P(s)`, `s ∈ [0, 1]`, starting at
    /// the identity, tracked from the line at `base_angle`.
    pub fn from_path(path: impl Fn(f64) -> Matrix2<f64>, base_angle: f64, steps: usize) -> Result<Self> {
        let steps = steps.max(1);
        let v0 = Vector2::new(base_angle.cos(), base_angle.sin());
        let mut prev = line_angle_of(&v0);
        let mut lifted = base_angle;
        for k in 1..=steps {
            let a = line_angle_of(&(path(k as f64 / steps as f64) * v0));
            lifted += wrap_pi(a - prev);
            prev = a;
        }
        Self::new(path(1.0), base_angle, lifted - base_angle)
    }

    /// Conjugate by `g` (positive determinant), moving the base line along.
    pub fn conjugate(&self, g: &Matrix2<f64>) -> Result<Self> {
        let ginv = g.try_inverse().ok_or(EngelError::InvalidParameter("singular conjugator".into()))?;
        let p = self.mat();
        let base = Vector2::new(self.base_angle.cos(), self.base_angle.sin());
        let new_base = line_angle_of(&(g * base));
        // Lift of g·φ̃·g⁻¹ at g(θ₀): follow g along the lifted path θ₀ → θ₀ + winding.
        let steps = ((self.winding.abs() / 0.05).ceil() as usize).max(1);
        let mut prev = new_base;
        let mut lifted = new_base;
        for k in 1..=steps {
            let th = self.base_angle + self.winding * k as f64 / steps as f64;
            let a = line_angle_of(&(g * Vector2::new(th.cos(), th.sin())));
            lifted += wrap_pi(a - prev);
            prev = a;
        }
        Self::new(g * p * ginv, new_base, lifted - new_base)
    }
}

/// Projective type of a closed characteristic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum ProjectiveType {
    Elliptic { length: f64 },
    Parabolic,
    Hyperbolic { trace: f64 },
    TransParabolic { n: u32, sign: i8 },
    TransHyperbolic { n: u32, trace: f64 },
}

impl ProjectiveType {
    pub fn label(&self) -> &'static str {
        match self {
            ProjectiveType::Elliptic { .. } => "elliptic",
            ProjectiveType::Parabolic => "parabolic",
            ProjectiveType::Hyperbolic { .. } => "hyperbolic",
            ProjectiveType::TransParabolic { .. } => "trans-parabolic",
            ProjectiveType::TransHyperbolic { .. } => "trans-hyperbolic",
        }
    }
}

impl fmt::Display for ProjectiveType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjectiveType::Elliptic { length } => write!(f, "Elliptic (length {:.6}π)", length / PI),
            ProjectiveType::Parabolic => write!(f, "Parabolic"),
            ProjectiveType::Hyperbolic { trace } => write!(f, "Hyperbolic (|trace| {trace:.6})"),
            ProjectiveType::TransParabolic { n, sign } => write!(f, "Trans-parabolic (n = {n}, sign {sign:+})"),
            ProjectiveType::TransHyperbolic { n, trace } => {
                write!(f, "Trans-hyperbolic (n = {n}, |trace| {trace:.6})")
            }
        }
    }
}

/// Angle of a line in `[0, π)`.
fn line_angle_of(v: &Vector2<f64>) -> f64 {
    v[1].atan2(v[0]).rem_euclid(PI)
}

/// Representative of `a` modulo π in `(−π/2, π/2]`.
fn wrap_pi(a: f64) -> f64 {
    let r = a - PI * (a / PI).round();
    if r <= -PI / 2.0 {
        r + PI
    } else {
        r
    }
}

/// Angles in `[0, π)` of the real eigenlines of `p`.
fn fixed_lines(p: &Matrix2<f64>) -> Vec<f64> {
    let tr = p.trace();
    let det = p.determinant();
    let disc = tr * tr / 4.0 - det;
    if disc < 0.0 {
        return Vec::new();
    }
    let roots = if disc == 0.0 { vec![tr / 2.0] } else { vec![tr / 2.0 + disc.sqrt(), tr / 2.0 - disc.sqrt()] };
    let mut out: Vec<f64> = roots
        .into_iter()
        .map(|l| {
            let n = p - Matrix2::identity() * l;
            // kernel of n: orthogonal to its larger row
            let r = if n.row(0).norm() >= n.row(1).norm() { n.row(0) } else { n.row(1) };
            line_angle_of(&Vector2::new(-r[1], r[0]))
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    out
}

/// The fixed line of a matrix in the parabolic band, read off `±P − I`.
fn parabolic_line(p: &Matrix2<f64>) -> Vec<f64> {
    let q = p * p.trace().signum() - Matrix2::identity();
    let r = if q.row(0).norm() >= q.row(1).norm() { q.row(0) } else { q.row(1) };
    if r.norm() == 0.0 {
        return Vec::new();
    }
    vec![line_angle_of(&Vector2::new(-r[1], r[0]))]
}

/// Number of lifted fixed angles `f + kπ` in `(0, θ]` (negative for `θ < 0`).
fn count_lifted(fixed: &[f64], theta: f64) -> i64 {
    fixed.iter().map(|f| ((theta - f) / PI).floor() as i64 - (-f / PI).floor() as i64).sum()
}

/// Classify first-return data into the five projective types.
pub fn classify_projective(h: &HolonomyLift, tol: f64) -> Result<ProjectiveType> {
    let p = h.mat();
    let (w, th0) = (h.winding, h.base_angle);
    if !(w.is_finite() && th0.is_finite() && p.iter().all(|x| x.is_finite())) {
        return Err(EngelError::InvalidParameter("non-finite holonomy data".into()));
    }
    let image = p * Vector2::new(th0.cos(), th0.sin());
    let consistency = wrap_pi(th0 + w - image[1].atan2(image[0]));
    if consistency.abs() > 1e-6_f64.max(tol) {
        return Err(EngelError::InvalidParameter(format!(
            "winding disagrees with the matrix action by {consistency:e}"
        )));
    }
    let tr = p.trace();
    let atr = tr.abs();
    let id = Matrix2::identity();
    if (p - id).amax() < tol || (p + id).amax() < tol {
        return Ok(ProjectiveType::Elliptic { length: (w / PI).round() * PI });
    }
    if atr < 2.0 - tol {
        let alpha = (tr / 2.0).acos();
        let v = Vector2::new(th0.cos(), th0.sin());
        let pv = p * v;
        let ccw = v[0] * pv[1] - v[1] * pv[0] > 0.0;
        // forward displacement modulo π of the conjugate rotation
        let forward = if ccw { alpha } else { PI - alpha };
        let n = (w / PI).floor();
        return Ok(ProjectiveType::Elliptic { length: n * PI + forward });
    }
    let in_band = (atr - 2.0).abs() <= tol;
    let near_multiple = (w - PI * (w / PI).round()).abs() <= tol;
    if in_band && near_multiple {
        return Err(EngelError::AmbiguousClass { trace: tr, winding: w });
    }
    let fixed = if in_band { parabolic_line(&p) } else { fixed_lines(&p) };
    if fixed.is_empty() {
        return Err(EngelError::AmbiguousClass { trace: tr, winding: w });
    }
    let at_fixed = fixed.iter().any(|f| wrap_pi(th0 - f).abs() <= tol);
    let n = if at_fixed {
        (w / PI).round() as i64
    } else {
        let shift = count_lifted(&fixed, th0 + w) - count_lifted(&fixed, th0);
        shift.div_euclid(fixed.len() as i64)
    };
    let n_abs = n.unsigned_abs() as u32;
    if in_band {
        if n == 0 {
            return Ok(ProjectiveType::Parabolic);
        }
        let q = p * tr.signum() - id;
        let f = fixed[0];
        let v = Vector2::new((f + PI / 2.0).cos(), (f + PI / 2.0).sin());
        let qv = q * v;
        let sign = if v[0] * qv[1] - v[1] * qv[0] >= 0.0 { 1 } else { -1 };
        return Ok(ProjectiveType::TransParabolic { n: n_abs, sign });
    }
    if n == 0 {
        Ok(ProjectiveType::Hyperbolic { trace: atr })
    } else {
        Ok(ProjectiveType::TransHyperbolic { n: n_abs, trace: atr })
    }
}

/// `t ↦ exp(tA)` in closed form for a constant generator: rotation-like
/// (`cos`, `sin`) when `det A₀ > 0`, `cosh`/`sinh` when `det A₀ < 0` and
/// unipotent when `A₀` is nilpotent, with `A₀ = A − (tr A/2)I`.
pub fn holonomy_closed_form(a: Matrix2<f64>) -> impl Fn(f64) -> Matrix2<f64> {
    let half = a.trace() / 2.0;
    let a0 = a - Matrix2::identity() * half;
    let d = a0.determinant();
    move |t| {
        let id = Matrix2::identity();
        let core = if d > 1e-15 {
            let k = d.sqrt();
            id * (k * t).cos() + a0 * ((k * t).sin() / k)
        } else if d < -1e-15 {
            let k = (-d).sqrt();
            id * (k * t).cosh() + a0 * ((k * t).sinh() / k)
        } else {
            id + a0 * t
        };
        core * (half * t).exp()
    }
}

/// `S M S⁻¹` with `S = diag(1/K, 1)`: coordinates in the frame `(K e₁, e₂)`.
pub fn rescale_first(m: &Matrix2<f64>, k: f64) -> Matrix2<f64> {
    let s = Matrix2::new(1.0 / k, 0.0, 0.0, 1.0);
    let si = Matrix2::new(k, 0.0, 0.0, 1.0);
    s * m * si
}

/// Difference `a − b` with periodic coordinates reduced to half a period.
fn chart_delta(s: &EngelStructure, a: &[f64], b: &[f64]) -> Vec<f64> {
    let coords = match &s.model {
        FrameModel::Chart(c) => c.domain.coords.clone(),
        FrameModel::Lie(m) => vec![Coord::Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }; m.dim()],
    };
    a.iter()
        .zip(b)
        .zip(coords)
        .map(|((x, y), c)| match c {
            Coord::Periodic { period } => {
                let d = x - y;
                d - period * (d / period).round()
            }
            Coord::Interval { .. } => x - y,
        })
        .collect()
}

fn point_at(s: &EngelStructure, p0: &[f64], tau: f64, dt: f64) -> Result<Vec<f64>> {
    let n = ((tau / dt).ceil() as usize).max(1);
    let h = tau / n as f64;
    let mut p = p0.to_vec();
    for _ in 0..n {
        p = rk4_step(&p, h, &mut |y: &[f64]| s.w.eval(y).map(|v| v.iter().copied().collect()))?;
    }
    Ok(p)
}

/// A closed characteristic found by [`first_return`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedOrbit {
    pub period: f64,
    pub closing_error: f64,
    pub holonomy: HolonomyLift,
    pub trace: OrbitTrace,
}

/// Detect the first return of the `W`-orbit through `p0` to a section
/// through `p0` within `t_max`, refine the return time and read off the
/// first-return holonomy on `P(E/W)`.
pub fn first_return(s: &EngelStructure, p0: &[f64], t_max: f64, dt: f64) -> Result<ClosedOrbit> {
    if matches!(s.model, FrameModel::Lie(_)) {
        return Err(EngelError::NotClosed);
    }
    let dom = s.domain().cloned().ok_or(EngelError::NotClosed)?;
    let w0: Vec<f64> = s.w.eval(p0)?.iter().copied().collect();
    let section = |p: &[f64]| chart_delta(s, p, p0).iter().zip(&w0).map(|(a, b)| a * b).sum::<f64>();
    let coarse = integrate_characteristic(s, p0, t_max, dt)?;
    let speed = w0.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut left = false;
    for k in 1..coarse.len() {
        let (pa, pb) = (&coarse.points[k - 1], &coarse.points[k]);
        if dom.distance(pb, p0) > 4.0 * dt * speed {
            left = true;
        }
        let (fa, fb) = (section(pa), section(pb));
        if !(left && fa < 0.0 && fb >= 0.0 && dom.distance(pb, p0) < 0.5) {
            continue;
        }
        // secant refinement of the section crossing
        let (mut ta, mut tb) = (coarse.times[k - 1], coarse.times[k]);
        let (mut ga, mut gb) = (fa, fb);
        for _ in 0..60 {
            if (gb - ga).abs() < 1e-300 {
                break;
            }
            let tc = tb - gb * (tb - ta) / (gb - ga);
            let gc = section(&point_at(s, p0, tc, dt)?);
            (ta, ga, tb, gb) = (tb, gb, tc, gc);
            if gc.abs() < 1e-14 {
                break;
            }
        }
        let tau = tb;
        let n = ((tau / dt).ceil() as usize).max(1);
        let trace = characteristic_orbit(s, p0, tau, tau / n as f64)?;
        let last = trace.points.last().expect("non-empty");
        let err = dom.distance(last, p0);
        if err > CLOSE_TOL {
            continue;
        }
        let m = trace.matrix(trace.len() - 1);
        let flip = Matrix2::new(1.0, 0.0, 0.0, trace.orientation);
        let minv = m.try_inverse().ok_or(EngelError::FrameDegenerate { t: tau })?;
        let holonomy = HolonomyLift::new(flip * minv * flip, trace.angle[0], trace.developing_length())?;
        return Ok(ClosedOrbit { period: tau, closing_error: err, holonomy, trace });
    }
    Err(EngelError::NotClosed)
}
