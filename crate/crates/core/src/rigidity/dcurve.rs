use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{EngelError, Result};
use crate::numeric::{rk4_step_t, time_grid};

/// A scalar control `t ↦ u(t)`.
pub type Control = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Largest accepted change of any coordinate over one integration step.
pub const MAX_STEP_INCREMENT: f64 = 0.25;

/// Which Engel–Darboux chart a curve lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DarbouxChart {
    /// `D = ker(dy − z dx) ∩ ker(dz − w dx)`, frame `(∂x + z∂y + w∂z, ∂w)`.
    Standard,
    /// `D = ker(dy − z dx) ∩ ker(cosθ dz − sinθ dx)`,
    /// frame `(cosθ(∂x + z∂y) + sinθ ∂z, ∂θ)`.
    Long,
}

/// Coefficients of a D-curve's velocity in the chart's D-frame.
#[derive(Clone)]
pub struct Controls {
    pub u: Control,
    pub v: Control,
}

impl fmt::Debug for Controls {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Controls { .. }")
    }
}

impl Controls {
    pub fn new(u: impl Fn(f64) -> f64 + Send + Sync + 'static, v: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { u: Arc::new(u), v: Arc::new(v) }
    }

    /// Controls with `v ≡ 1`, so that the fourth coordinate equals `t` from the origin.
    pub fn graph(u: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(u, |_| 1.0)
    }
}

/// An integral curve of `D` generated from its controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DCurve {
    pub chart: DarbouxChart,
    pub times: Vec<f64>,
    pub points: Vec<[f64; 4]>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn velocity(chart: DarbouxChart, p: &[f64], u: f64, v: f64) -> Vec<f64> {
    match chart {
        DarbouxChart::Standard => vec![u, p[2] * u, p[3] * u, v],
        DarbouxChart::Long => {
            let (s, c) = p[3].sin_cos();
            vec![c * u, p[2] * c * u, s * u, v]
        }
    }
}

/// Integrate the D-frame ODE for the given controls on `[0, T]`
/// (backwards for negative `T`).
pub fn sample_d_curve_in(chart: DarbouxChart, controls: &Controls, t_total: f64, dt: f64, start: [f64; 4]) -> Result<DCurve> {
    if dt <= 0.0 || !dt.is_finite() || !t_total.is_finite() {
        return Err(EngelError::InvalidParameter("dt must be positive and T finite".into()));
    }
    let times = time_grid(t_total, dt);
    let mut points = vec![start];
    let mut rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>> {
        let (u, v) = ((controls.u)(t), (controls.v)(t));
        if !(u.is_finite() && v.is_finite()) {
            return Err(EngelError::NonFiniteEvaluation { point: vec![t] });
        }
        Ok(velocity(chart, y, u, v))
    };
    for k in 1..times.len() {
        let prev = points[k - 1];
        let next = rk4_step_t(times[k - 1], &prev, times[k] - times[k - 1], &mut rhs)?;
        let increment = next.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !(increment <= MAX_STEP_INCREMENT) {
            return Err(EngelError::StepTooLarge { t: times[k], increment });
        }
        points.push([next[0], next[1], next[2], next[3]]);
    }
    let u = times.iter().map(|&t| (controls.u)(t)).collect();
    let v = times.iter().map(|&t| (controls.v)(t)).collect();
    Ok(DCurve { chart, times, points, u, v })
}

/// D-curve in the standard chart: `ẋ = u, ẏ = z u, ż = w u, ẇ = v`.
pub fn sample_d_curve(controls: &Controls, t_total: f64, dt: f64, start: [f64; 4]) -> Result<DCurve> {
    sample_d_curve_in(DarbouxChart::Standard, controls, t_total, dt, start)
}

impl DCurve {
    pub fn endpoint(&self) -> [f64; 4] {
        *self.points.last().expect("curves have at least one point")
    }

    /// Largest per-step defect of the two contact forms defining `D`,
    /// integrated with the trapezoid rule over each step.
    pub fn tangency_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 1..self.points.len() {
            let (a, b) = (self.points[k - 1], self.points[k]);
            let dx = b[0] - a[0];
            let r1 = (b[1] - a[1]) - 0.5 * (a[2] + b[2]) * dx;
            let r2 = match self.chart {
                DarbouxChart::Standard => (b[2] - a[2]) - 0.5 * (a[3] + b[3]) * dx,
                DarbouxChart::Long => {
                    let (ca, cb) = (a[3].cos(), b[3].cos());
                    let (sa, sb) = (a[3].sin(), b[3].sin());
                    0.5 * (ca + cb) * (b[2] - a[2]) - 0.5 * (sa + sb) * dx
                }
            };
            worst = worst.max(r1.abs()).max(r2.abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_curve_and_x_curve() {
        let w = sample_d_curve(&Controls::new(|_| 0.0, |_| 1.0), 1.0, 0.01, [0.0; 4]).unwrap();
        for (t, p) in w.times.iter().zip(&w.points) {
            assert_eq!(p[..3], [0.0, 0.0, 0.0]);
            assert!((p[3] - t).abs() < 1e-14);
        }
        let x = sample_d_curve(&Controls::new(|_| 1.0, |_| 0.0), 1.0, 0.01, [0.0; 4]).unwrap();
        let e = x.endpoint();
        assert!((e[0] - 1.0).abs() < 1e-14 && e[1] == 0.0 && e[2] == 0.0 && e[3] == 0.0);
    }

    #[test]
    fn generated_curves_are_tangent() {
        let c = sample_d_curve(&Controls::new(|t| (3.0 * t).sin(), |t| 1.0 + t), 2.0, 1e-3, [0.1, 0.2, -0.3, 0.4]).unwrap();
        assert!(c.tangency_residual() < 1e-6);
        let c = sample_d_curve_in(DarbouxChart::Long, &Controls::new(|t| t.cos(), |_| 1.0), 4.0, 1e-3, [0.0; 4]).unwrap();
        assert!(c.tangency_residual() < 1e-6);
    }

    #[test]
    fn huge_controls_trip_the_step_guard() {
        let err = sample_d_curve(&Controls::new(|_| 1e3, |_| 1.0), 1.0, 0.01, [0.0; 4]).unwrap_err();
        assert!(matches!(err, EngelError::StepTooLarge { .. }));
    }
}
