use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dcurve::{sample_d_curve_in, Control, Controls, DCurve, DarbouxChart};
use crate::error::{EngelError, Result};

/// Per-step tangency defect tolerated in a variation.
pub const VARIATION_TANGENCY_TOL: f64 = 1e-6;

/// Control perturbation `(g, h)`; the variation uses `u = s·g`, `v = 1 + s·h`
/// along a W-curve.
#[derive(Clone)]
pub struct Perturbation {
    pub g: Control,
    pub h: Control,
}

impl fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Perturbation { .. }")
    }
}

impl Perturbation {
    pub fn new(g: impl Fn(f64) -> f64 + Send + Sync + 'static, h: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { g: Arc::new(g), h: Arc::new(h) }
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, |_| 0.0)
    }

    /// Random trigonometric perturbation on `[0, length]`.
    pub fn random(rng: &mut impl Rng, length: f64) -> Self {
        let a: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let k = PI / length;
        Self::new(
            move |t| a[0] + a[1] * (k * t).sin() + a[2] * (2.0 * k * t).cos(),
            move |t| a[3] * (k * t).cos() + a[4] * (3.0 * k * t).sin() + a[5] * t / length,
        )
    }

    /// `sup |g| + sup |h|` sampled on the grid.
    pub fn norm_on(&self, times: &[f64]) -> f64 {
        let sup = |f: &Control| times.iter().map(|&t| f(t).abs()).fold(0.0, f64::max);
        sup(&self.g) + sup(&self.h)
    }
}

/// Base curve and variation of an infinitesimal rigidity test.
#[derive(Clone, Debug)]
pub enum IwrKind {
    /// `(0, 0, 0, t)` for `t ∈ [0, length]` in the given chart, varied by
    /// perturbing the controls; only the start point is held fixed.
    WCurve { chart: DarbouxChart, length: f64, perturbation: Perturbation },
    /// The x-axis segment `[−ε, ε]` with the graph variation `y = s f(x)`,
    /// `z = s f′(x)`, `w = s f″(x)` for the bump `f = (1 − (x/ε)²)⁴`.
    Transverse { half_width: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IwrReport {
    pub kind: String,
    pub ds: f64,
    pub times: Vec<f64>,
    /// Richardson-extrapolated `∂y/∂s(0, t)`.
    pub dy_ds: Vec<f64>,
    pub max_dy_ds: f64,
    pub perturbation_norm: f64,
    /// `max |∂y/∂s|` per unit perturbation norm (zero for a zero perturbation).
    pub ratio: f64,
    pub max_tangency_residual: f64,
}

/// Bump `(1 − r²)⁴`, `r = x/ε`, and its third derivative in `x`.
fn bump(x: f64, eps: f64) -> (f64, f64) {
    let r = x / eps;
    if r.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - r * r;
    (q.powi(4), 48.0 * r * q * (3.0 * q - 4.0 * r * r) / eps.powi(3))
}

fn family(kind: &IwrKind, dt: f64) -> Result<(DarbouxChart, f64, [f64; 4], Box<dyn Fn(f64) -> Controls + Sync>, f64)> {
    match kind {
        IwrKind::WCurve { chart, length, perturbation } => {
            if !(*length > 0.0) {
                return Err(EngelError::InvalidParameter("W-curve length must be positive".into()));
            }
            let p = perturbation.clone();
            let grid = crate::numeric::time_grid(*length, dt);
            let norm = p.norm_on(&grid);
            let make = move |s: f64| {
                let (g, h) = (p.g.clone(), p.h.clone());
                Controls::new(move |t| s * g(t), move |t| 1.0 + s * h(t))
            };
            Ok((*chart, *length, [0.0; 4], Box::new(make), norm))
        }
        IwrKind::Transverse { half_width } => {
            let eps = *half_width;
            if !(eps > 0.0) {
                return Err(EngelError::InvalidParameter("half width must be positive".into()));
            }
            let make = move |s: f64| Controls::new(|_| 1.0, move |t| s * bump(t - eps, eps).1);
            Ok((DarbouxChart::Standard, 2.0 * eps, [-eps, 0.0, 0.0, 0.0], Box::new(make), 1.0))
        }
    }
}

fn y_profile(curve: &DCurve) -> Vec<f64> {
    curve.points.iter().map(|p| p[1]).collect()
}

/// `max_t |∂y/∂s(0, t)|` for the variation described by `kind`, from central
/// differences at `±ds` and `±ds/2` combined by Richardson extrapolation.
pub fn infinitesimal_rigidity_check(kind: &IwrKind, ds: f64, dt: f64) -> Result<IwrReport> {
    if !(ds > 0.0) {
        return Err(EngelError::InvalidParameter("ds must be positive".into()));
    }
    let (chart, length, start, make, norm) = family(kind, dt)?;
    let mut residual: f64 = 0.0;
    let mut run = |s: f64| -> Result<DCurve> {
        let c = sample_d_curve_in(chart, &make(s), length, dt, start)?;
        let r = c.tangency_residual();
        if r > VARIATION_TANGENCY_TOL {
            return Err(EngelError::VariationNotDCurve { residual: r });
        }
        residual = residual.max(r);
        Ok(c)
    };
    let base = run(0.0)?;
    let ys: Vec<Vec<f64>> = [ds, -ds, ds / 2.0, -ds / 2.0]
        .iter()
        .map(|&s| run(s).map(|c| y_profile(&c)))
        .collect::<Result<_>>()?;
    let dy_ds: Vec<f64> = (0..base.times.len())
        .map(|i| {
            let d1 = (ys[0][i] - ys[1][i]) / (2.0 * ds);
            let d2 = (ys[2][i] - ys[3][i]) / ds;
            (4.0 * d2 - d1) / 3.0
        })
        .collect();
    let max_dy_ds = dy_ds.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let label = match kind {
        IwrKind::WCurve { chart, .. } => format!("w_curve_{chart:?}").to_lowercase(),
        IwrKind::Transverse { .. } => "transverse".into(),
    };
    Ok(IwrReport {
        kind: label,
        ds,
        times: base.times,
        max_dy_ds,
        ratio: if norm > 0.0 { max_dy_ds / norm } else { max_dy_ds },
        dy_ds,
        perturbation_norm: norm,
        max_tangency_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn long_w_curve_is_rigid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let kind = IwrKind::WCurve {
                chart: DarbouxChart::Long,
                length: 1.5 * PI,
                perturbation: Perturbation::random(&mut rng, 1.5 * PI),
            };
            let r = infinitesimal_rigidity_check(&kind, 1e-4, 1e-3).unwrap();
            assert!(r.ratio < 1e-6, "{}", r.ratio);
        }
    }

    #[test]
    fn transverse_bump_is_flexible() {
        let r = infinitesimal_rigidity_check(&IwrKind::Transverse { half_width: 0.5 }, 1e-4, 1e-3).unwrap();
        assert!(r.ratio > 0.1);
        // ∂y/∂s recovers the bump itself
        for (t, d) in r.times.iter().zip(&r.dy_ds) {
            assert!((d - bump(t - 0.5, 0.5).0).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_perturbation_gives_zero() {
        let kind = IwrKind::WCurve { chart: DarbouxChart::Long, length: 2.0, perturbation: Perturbation::zero() };
        let r = infinitesimal_rigidity_check(&kind, 1e-4, 1e-2).unwrap();
        assert_eq!(r.max_dy_ds, 0.0);
    }
}
