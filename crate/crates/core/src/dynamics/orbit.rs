use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::engel::EngelStructure;
use crate::error::{EngelError, Result};
use crate::frame::FrameModel;
use crate::numeric::{rk4_step, time_grid, NumericConfig};

/// Largest accepted change of the developing angle between grid points.
pub const STEP_GUARD: f64 = PI / 4.0;

/// A sampled orbit of the Cauchy characteristic `W` with the linearized
/// action on `E/W` and the developing angle of `D/W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub structure: String,
    pub coord_names: Vec<String>,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// Transport of the quotient frame, `M(0) = I`, stored raw.
    pub m: Vec<[[f64; 2]; 2]>,
    /// `log det M(t)`, integrated as `∫ tr A` rather than read off `M`.
    pub log_det: Vec<f64>,
    /// Lifted angle of `D/W` pulled back to the fiber over the start point,
    /// oriented so that it increases along the orbit.
    pub angle: Vec<f64>,
    /// `+1` if the raw angle already increased, `−1` if it was reflected.
    pub orientation: f64,
}

pub(crate) fn to_mat(m: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

pub(crate) fn from_mat(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

/// Larger singular value of `M / √det M` given `log det M`; uses
/// `σ² + σ⁻² = |M|_F² / det M`, which avoids cancellation in `det`.
pub fn sigma_max(m: &Matrix2<f64>, log_det: f64) -> f64 {
    let f = (m.norm_squared() * (-log_det).exp()).max(2.0);
    ((f + (f * f - 4.0).max(0.0).sqrt()) / 2.0).sqrt()
}

/// `M / √|det M|`.
pub fn det_normalized(m: &Matrix2<f64>) -> Matrix2<f64> {
    m / m.determinant().abs().sqrt()
}

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn matrix(&self, i: usize) -> Matrix2<f64> {
        to_mat(&self.m[i])
    }

    /// Larger singular value of the det-normalized transport.
    pub fn sigma_max(&self, i: usize) -> f64 {
        sigma_max(&self.matrix(i), self.log_det[i])
    }

    /// Conformal distortion: ratio of the singular values of `M(t_i)`.
    pub fn distortion(&self, i: usize) -> f64 {
        self.sigma_max(i).powi(2)
    }

    /// Total developing length `θ(t_end) − θ(t_0)`.
    pub fn developing_length(&self) -> f64 {
        match (self.angle.first(), self.angle.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// CSV with columns `t, <coords>, m11, m12, m21, m22, angle`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for n in &self.coord_names {
            out.push(',');
            out.push_str(n);
        }
        out.push_str(",m11,m12,m21,m22,angle\n");
        for i in 0..self.len() {
            let _ = write!(out, "{:.16e}", self.times[i]);
            for x in &self.points[i] {
                let _ = write!(out, ",{x:.16e}");
            }
            let m = self.m.get(i).copied().unwrap_or([[f64::NAN; 2]; 2]);
            let a = self.angle.get(i).copied().unwrap_or(f64::NAN);
            let _ = writeln!(out, ",{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", m[0][0], m[0][1], m[1][0], m[1][1], a);
        }
        out
    }
}

fn coord_names(s: &EngelStructure) -> Vec<String> {
    match &s.model {
        FrameModel::Chart(c) => c.domain.names.clone(),
        FrameModel::Lie(m) => (0..m.dim()).map(|i| format!("u{i}")).collect(),
    }
}

/// Matrix of `−ad_W` on `E/W` in the quotient frame, so that the
/// pushforward by the flow satisfies `M′ = A M`.
pub fn transport_generator(s: &EngelStructure, p: &[f64], cfg: &NumericConfig) -> Result<Matrix2<f64>> {
    let mut a = Matrix2::zeros();
    for j in 0..2 {
        let br = s.model.bracket(&s.w, &s.quotient_frame[j], p, cfg)?;
        let c = s.quotient_coords(&br, p)?;
        a[(0, j)] = -c[0];
        a[(1, j)] = -c[1];
    }
    Ok(a)
}

fn w_velocity(s: &EngelStructure, p: &[f64], t: f64) -> Result<Vec<f64>> {
    match s.w.eval(p) {
        Ok(v) if v.iter().all(|x| x.is_finite()) => Ok(v.iter().copied().collect()),
        Ok(_) => Err(EngelError::NonFiniteEvaluation { point: p.to_vec() }),
        Err(EngelError::DomainViolation { .. }) => Err(EngelError::ChartExit { t_exit: t }),
        Err(e) => Err(e),
    }
}

/// Points of the `W`-orbit through `p0` on the grid `[0, T]` (backwards for
/// `T < 0`). Chart models use RK4; Lie models use the exact flow `p0 + tW`
/// in canonical coordinates.
pub fn integrate_characteristic(s: &EngelStructure, p0: &[f64], t_total: f64, dt: f64) -> Result<OrbitTrace> {
    if dt <= 0.0 || !dt.is_finite() || !t_total.is_finite() {
        return Err(EngelError::InvalidParameter("dt must be positive and T finite".into()));
    }
    if p0.len() != s.dim() {
        return Err(EngelError::DimensionMismatch { expected: s.dim(), got: p0.len() });
    }
    let times = time_grid(t_total, dt);
    let mut points = vec![p0.to_vec()];
    match &s.model {
        FrameModel::Lie(_) => {
            let w = s.w.eval(p0)?;
            for &t in &times[1..] {
                points.push(p0.iter().zip(w.iter()).map(|(x, v)| x + t * v).collect());
            }
        }
        FrameModel::Chart(_) => {
            w_velocity(s, p0, 0.0)?;
            for k in 1..times.len() {
                let (t, h) = (times[k], times[k] - times[k - 1]);
                let next = rk4_step(&points[k - 1], h, &mut |y: &[f64]| w_velocity(s, y, t))?;
                if let Some(dom) = s.domain() {
                    if !dom.contains(&next) {
                        return Err(EngelError::ChartExit { t_exit: times[k] });
                    }
                }
                points.push(next);
            }
        }
    }
    Ok(OrbitTrace {
        structure: s.name.clone(),
        coord_names: coord_names(s),
        times,
        points,
        m: Vec::new(),
        log_det: Vec::new(),
        angle: Vec::new(),
        orientation: 1.0,
    })
}

/// Unwrap `new` (a line angle, defined mod π) next to `prev`.
pub(crate) fn unwrap_line(prev: f64, new: f64) -> f64 {
    prev + (new - prev - PI * ((new - prev) / PI).round())
}

/// Solve `M′ = A M` along the orbit together with the point ODE (so stage
/// points are consistent) and fill the developing angle of `D/W`.
pub fn transport_emodw(s: &EngelStructure, orbit: &OrbitTrace) -> Result<OrbitTrace> {
    transport_with(s, orbit, &NumericConfig::default())
}

pub fn transport_with(s: &EngelStructure, orbit: &OrbitTrace, cfg: &NumericConfig) -> Result<OrbitTrace> {
    if orbit.is_empty() {
        return Err(EngelError::EmptyInput);
    }
    let n = s.dim();
    let lie = matches!(s.model, FrameModel::Lie(_));
    let mut out = orbit.clone();
    out.m = vec![from_mat(&Matrix2::identity())];
    out.log_det = vec![0.0];
    let mut y: Vec<f64> = orbit.points[0].clone();
    y.extend([1.0, 0.0, 0.0, 1.0, 0.0]);
    for k in 1..orbit.len() {
        let (t, h) = (orbit.times[k - 1], orbit.times[k] - orbit.times[k - 1]);
        let mut rhs = |y: &[f64]| -> Result<Vec<f64>> {
            let p = &y[..n];
            let a = transport_generator(s, p, cfg).map_err(|e| match e {
                EngelError::FrameDegenerate { .. } => EngelError::FrameDegenerate { t },
                EngelError::DomainViolation { .. } => EngelError::ChartExit { t_exit: t },
                e => e,
            })?;
            let m = Matrix2::new(y[n], y[n + 1], y[n + 2], y[n + 3]);
            let dm = a * m;
            let mut v = if lie { s.w.eval(p)?.iter().copied().collect() } else { w_velocity(s, p, t)? };
            v.extend([dm[(0, 0)], dm[(0, 1)], dm[(1, 0)], dm[(1, 1)], a.trace()]);
            Ok(v)
        };
        y = rk4_step(&y, h, &mut rhs)?;
        if lie {
            // keep the exact Lie flow for the point part
            y[..n].copy_from_slice(&orbit.points[k]);
        } else {
            out.points[k] = y[..n].to_vec();
        }
        let m = Matrix2::new(y[n], y[n + 1], y[n + 2], y[n + 3]);
        if !m.iter().all(|x| x.is_finite()) {
            return Err(EngelError::FrameDegenerate { t: orbit.times[k] });
        }
        out.m.push(from_mat(&m));
        out.log_det.push(y[n + 4]);
    }
    fill_angles(s, &mut out)?;
    Ok(out)
}

/// Pulled-back line `u(t) = M(t)⁻¹ d(t)` where `d` is `D/W` in the quotient frame.
/// The adjugate is used instead of the inverse: it is exact for 2×2
/// matrices and stays accurate for very ill-conditioned transports.
pub(crate) fn pulled_back(m: &Matrix2<f64>, d: [f64; 2]) -> Result<Vector2<f64>> {
    let adj = Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]);
    let u = adj * Vector2::new(d[0], d[1]);
    Ok(u / u.norm())
}

fn fill_angles(s: &EngelStructure, out: &mut OrbitTrace) -> Result<()> {
    let mut raw = Vec::with_capacity(out.len());
    for k in 0..out.len() {
        let d = s.d_mod_w(&out.points[k]).map_err(|_| EngelError::FrameDegenerate { t: out.times[k] })?;
        let u = pulled_back(&out.matrix(k), d)?;
        let a = u[1].atan2(u[0]);
        let a = match raw.last() {
            None => a,
            Some(&prev) => {
                let next = unwrap_line(prev, a);
                if (next - prev).abs() > STEP_GUARD {
                    return Err(EngelError::StepTooLarge { t: out.times[k], increment: next - prev });
                }
                next
            }
        };
        raw.push(a);
    }
    let forward = out.times.last().copied().unwrap_or(0.0) >= out.times[0];
    let total = raw.last().copied().unwrap_or(0.0) - raw[0];
    let increasing = if forward { total >= 0.0 } else { total <= 0.0 };
    out.orientation = if increasing { 1.0 } else { -1.0 };
    out.angle = raw.iter().map(|a| out.orientation * a).collect();
    Ok(())
}

/// Integrate and transport in one call.
pub fn characteristic_orbit(s: &EngelStructure, p0: &[f64], t_total: f64, dt: f64) -> Result<OrbitTrace> {
    transport_emodw(s, &integrate_characteristic(s, p0, t_total, dt)?)
}

/// The developing path of `D/W` along a transported orbit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DevelopingPath {
    pub times: Vec<f64>,
    pub angle: Vec<f64>,
    /// `|θ(end) − θ(start)|`, in units of the projective line (π per turn).
    pub length: f64,
}

/// Relative slack allowed for numerically flat stretches of the angle.
const MONOTONICITY_SLACK: f64 = 1e-10;

/// Lifted angle `θ(t)` of `D/W`; must be strictly monotone in the flow
/// direction for an Engel structure.
pub fn developing_map(orbit: &OrbitTrace) -> Result<DevelopingPath> {
    if orbit.angle.len() != orbit.len() || orbit.is_empty() {
        return Err(EngelError::InvalidParameter("orbit has no transport data".into()));
    }
    let dir = if orbit.times.last() >= orbit.times.first() { 1.0 } else { -1.0 };
    for k in 1..orbit.len() {
        let inc = dir * (orbit.angle[k] - orbit.angle[k - 1]);
        if inc <= -MONOTONICITY_SLACK * (1.0 + orbit.angle[k].abs()) || inc == 0.0 {
            return Err(EngelError::MonotonicityViolation { t: orbit.times[k] });
        }
    }
    Ok(DevelopingPath {
        times: orbit.times.clone(),
        angle: orbit.angle.clone(),
        length: orbit.developing_length().abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engel::darboux_standard;

    #[test]
    fn darboux_orbit_is_the_w_line() {
        let s = darboux_standard();
        let o = characteristic_orbit(&s, &[0.0; 4], 1.0, 0.01).unwrap();
        for (t, p) in o.times.iter().zip(&o.points) {
            assert!((p[3] - t).abs() < 1e-14 && p[0] == 0.0 && p[1] == 0.0 && p[2] == 0.0);
        }
        for (t, a) in o.times.iter().zip(&o.angle) {
            assert!((a - t.atan()).abs() < 1e-10);
        }
        let last = o.matrix(o.len() - 1);
        assert!((last - Matrix2::new(1.0, 0.0, -1.0, 1.0)).amax() < 1e-12);
    }

    #[test]
    fn csv_has_fixed_header() {
        let o = characteristic_orbit(&darboux_standard(), &[0.0; 4], 0.1, 0.05).unwrap();
        let csv = o.to_csv();
        assert!(csv.starts_with("t,x,y,z,w,m11,m12,m21,m22,angle\n"));
        assert_eq!(csv.lines().count(), 1 + o.len());
    }

    #[test]
    fn chart_exit_is_reported() {
        let err = integrate_characteristic(&darboux_standard(), &[0.0, 0.0, 0.0, 1.5], 1.0, 0.01).unwrap_err();
        assert!(matches!(err, EngelError::ChartExit { t_exit } if (0.499..0.511).contains(&t_exit)), "{err:?}");
    }
}
