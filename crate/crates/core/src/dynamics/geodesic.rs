//! Projections of Cauchy characteristics of magnetic extensions to the base surface.

use serde::{Deserialize, Serialize};

use super::orbit::OrbitTrace;
use crate::error::{EngelError, Result};
use crate::frame::{FrameModel, Section};
use crate::lorentz::{ExtensionKind, LorentzExtension};
use crate::numeric::rk4_step;
use crate::prolong::lorentz_prolongation;
use crate::surface::ConformalSurface;

/// Flow step used for the central difference of the velocity.
const ACCEL_STEP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub t: f64,
    pub speed: f64,
    pub geodesic_curvature: f64,
    pub curvature: f64,
    /// `κ_g + κ`
    pub r1: f64,
    /// `κ_g − (θ̇ + 1)`
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicResiduals {
    pub samples: Vec<GeodesicSample>,
    pub max_speed_error: f64,
    pub max_r1: f64,
    pub max_r2: f64,
}

fn flow(w: &Section, p: &[f64], h: f64) -> Result<Vec<f64>> {
    let field = w.as_chart().ok_or(EngelError::ModelMismatch)?;
    rk4_step(p, h, &mut |y: &[f64]| Ok(field.eval_unchecked(y)?.iter().copied().collect()))
}

/// Speed and geodesic curvature (for `e^{2σ}|dx|²`, oriented by the
/// standard orientation of the chart) of the projected orbit, compared with
/// `−κ` and with the rate of the fiber angle plus one.
pub fn geodesic_projection_check(ext: &LorentzExtension, orbit: &OrbitTrace) -> Result<GeodesicResiduals> {
    if !matches!(ext.kind, ExtensionKind::Magnetic) {
        return Err(EngelError::InvalidParameter("geodesic check needs a magnetic extension".into()));
    }
    let surf: &ConformalSurface = ext
        .surface()
        .ok_or_else(|| EngelError::InvalidParameter("geodesic check needs a surface chart".into()))?;
    if !matches!(ext.frame, FrameModel::Chart(_)) || orbit.is_empty() {
        return Err(EngelError::InvalidParameter("orbit must be a chart orbit".into()));
    }
    let s = lorentz_prolongation(ext)?;
    let mut samples = Vec::with_capacity(orbit.len());
    for (&t, p) in orbit.times.iter().zip(&orbit.points) {
        let w = s.w.eval(p)?;
        let (x, y) = (p[0], p[1]);
        let v = [w[0], w[1]];
        let vn = v[0].hypot(v[1]);
        let sigma = surf.sigma(x, y);
        let (plus, minus) = (flow(&s.w, p, ACCEL_STEP)?, flow(&s.w, p, -ACCEL_STEP)?);
        let (wp, wm) = (s.w.eval(&plus)?, s.w.eval(&minus)?);
        let a = [(wp[0] - wm[0]) / (2.0 * ACCEL_STEP), (wp[1] - wm[1]) / (2.0 * ACCEL_STEP)];
        let k0 = (v[0] * a[1] - v[1] * a[0]) / vn.powi(3);
        let n0 = [-v[1] / vn, v[0] / vn];
        let (gx, gy) = surf.grad_sigma(x, y);
        let kg = (-sigma).exp() * (k0 - (gx * n0[0] + gy * n0[1]));
        let kappa = surf.curvature(x, y);
        samples.push(GeodesicSample {
            t,
            speed: sigma.exp() * vn,
            geodesic_curvature: kg,
            curvature: kappa,
            r1: kg + kappa,
            r2: kg - (w[3] + 1.0),
        });
    }
    let max = |f: &dyn Fn(&GeodesicSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(GeodesicResiduals {
        max_speed_error: max(&|s| (s.speed - 1.0).abs()),
        max_r1: max(&|s| s.r1.abs()),
        max_r2: max(&|s| s.r2.abs()),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::orbit::integrate_characteristic;
    use crate::lorentz::{magnetic_extension, ExtensionBase};

    fn residuals(surf: ConformalSurface, p0: &[f64], back: f64) -> GeodesicResiduals {
        let ext = magnetic_extension(ExtensionBase::Chart(surf));
        let s = lorentz_prolongation(&ext).unwrap();
        let start = if back > 0.0 {
            integrate_characteristic(&s, p0, -back, 0.01).unwrap().points.last().unwrap().clone()
        } else {
            p0.to_vec()
        };
        let o = integrate_characteristic(&s, &start, 5.0, 0.01).unwrap();
        geodesic_projection_check(&ext, &o).unwrap()
    }

    #[test]
    fn sphere_orbits_curve_at_minus_one() {
        let r = residuals(ConformalSurface::sphere(1.0).unwrap(), &[0.1, -0.1, 0.3, 0.7], 0.0);
        assert!(r.max_speed_error < 1e-6, "{}", r.max_speed_error);
        assert!(r.max_r1 < 1e-3 && r.max_r2 < 1e-3, "{} {}", r.max_r1, r.max_r2);
    }

    #[test]
    fn flat_orbits_are_straight() {
        let r = residuals(ConformalSurface::flat(), &[0.0, 0.0, 1.0, 2.0], 0.0);
        assert!(r.max_speed_error < 1e-6);
        assert!(r.samples.iter().all(|s| s.geodesic_curvature.abs() < 1e-3));
    }

    #[test]
    fn hyperbolic_orbits_curve_at_one() {
        let r = residuals(ConformalSurface::poincare(-1.0).unwrap(), &[0.0, 0.0, 0.4, 1.0], 2.5);
        assert!(r.max_speed_error < 1e-6, "{}", r.max_speed_error);
        assert!(r.max_r1 < 1e-3 && r.max_r2 < 1e-3, "{} {}", r.max_r1, r.max_r2);
    }
}
