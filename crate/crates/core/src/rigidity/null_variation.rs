use serde::{Deserialize, Serialize};

use super::dcurve::Control;
use crate::error::{EngelError, Result};
use crate::numeric::{rk4_step_t, time_grid};
use crate::surface::{unit_tangent_frames, ConformalSurface};

/// Drift of `g(Ḃ, Ḃ)` tolerated along the varied curves.
pub const NULL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullVariationReport {
    pub surface: String,
    pub ds: f64,
    pub times: Vec<f64>,
    /// `dg(β̇(t), ∂B/∂s(0, t))`.
    pub pairing: Vec<f64>,
    pub max_residual: f64,
    /// Largest `|g(Ḃ, Ḃ)|` seen on the varied curves.
    pub null_drift: f64,
}

/// Null curves `B(s, t) = (c_s(t), θ = t)` in `(Σ, h) × (S¹, −dθ²)`, where
/// `c_s` has unit speed and direction angle bent by `s·bend(t)` away from the
/// geodesic `c_0` through `start = (x, y, φ)`. Returns the pairing of `β̇`
/// with the variation field, which vanishes along a null geodesic.
pub fn null_variation_check(
    surface: &ConformalSurface,
    start: [f64; 3],
    t_total: f64,
    dt: f64,
    bend: &Control,
    ds: f64,
) -> Result<NullVariationReport> {
    if !(ds > 0.0) || !(dt > 0.0) {
        return Err(EngelError::InvalidParameter("ds and dt must be positive".into()));
    }
    let spray = unit_tangent_frames(surface).fields[0].clone();
    let times = time_grid(t_total, dt);
    let mut drift: f64 = 0.0;
    let mut curve = |s: f64| -> Result<Vec<Vec<f64>>> {
        let mut pts = vec![start.to_vec()];
        for k in 1..times.len() {
            let next = rk4_step_t(times[k - 1], &pts[k - 1], times[k] - times[k - 1], &mut |t, y: &[f64]| {
                let mut v: Vec<f64> = spray
                    .eval(y)
                    .map_err(|e| match e {
                        EngelError::DomainViolation { .. } => EngelError::ChartExit { t_exit: t },
                        e => e,
                    })?
                    .iter()
                    .copied()
                    .collect();
                v[2] += s * bend(t);
                Ok::<_, EngelError>(v)
            })?;
            pts.push(next);
        }
        for p in &pts {
            let v = spray.eval(p)?;
            let speed2 = (2.0 * surface.sigma(p[0], p[1])).exp() * (v[0] * v[0] + v[1] * v[1]);
            // θ̇ = 1, so g(Ḃ, Ḃ) = |ċ|² − 1
            drift = drift.max((speed2 - 1.0).abs());
        }
        Ok(pts)
    };
    let base = curve(0.0)?;
    let varied: Vec<Vec<Vec<f64>>> = [ds, -ds, ds / 2.0, -ds / 2.0].iter().map(|&s| curve(s)).collect::<Result<_>>()?;
    if drift > NULL_TOL {
        return Err(EngelError::NotNull { residual: drift });
    }
    let mut pairing = Vec::with_capacity(times.len());
    for (i, p) in base.iter().enumerate() {
        let v = spray.eval(p)?;
        let mut j = [0.0; 2];
        for (c, jc) in j.iter_mut().enumerate() {
            let d1 = (varied[0][i][c] - varied[1][i][c]) / (2.0 * ds);
            let d2 = (varied[2][i][c] - varied[3][i][c]) / ds;
            *jc = (4.0 * d2 - d1) / 3.0;
        }
        // the θ-component of ∂B/∂s vanishes, so only the surface part pairs
        let e2s = (2.0 * surface.sigma(p[0], p[1])).exp();
        pairing.push(e2s * (v[0] * j[0] + v[1] * j[1]));
    }
    let max_residual = pairing.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(NullVariationReport { surface: surface.name.clone(), ds, times, pairing, max_residual, null_drift: drift })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    #[test]
    fn flat_sinusoidal_variation() {
        let bend: Control = Arc::new(|t: f64| (2.0 * t).sin());
        let r = null_variation_check(&ConformalSurface::flat(), [0.0, 0.0, 0.3], 3.0, 1e-3, &bend, 1e-4).unwrap();
        assert!(r.max_residual < 1e-6, "{}", r.max_residual);
    }

    #[test]
    fn sphere_variation() {
        let bend: Control = Arc::new(|t: f64| 1.0 + t.cos());
        let r = null_variation_check(&ConformalSurface::sphere(1.0).unwrap(), [0.1, -0.2, 1.0], 2.0, 1e-3, &bend, 1e-4).unwrap();
        assert!(r.max_residual < 1e-4, "{}", r.max_residual);
    }

    #[test]
    fn constant_family_has_zero_pairing() {
        let bend: Control = Arc::new(|_| 0.0);
        let r = null_variation_check(&ConformalSurface::flat(), [0.0, 0.0, 0.0], 1.0, 1e-2, &bend, 1e-4).unwrap();
        assert_eq!(r.max_residual, 0.0);
    }
}
