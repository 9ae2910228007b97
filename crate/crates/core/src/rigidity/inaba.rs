use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::access::{accessible_membership, boundary_cone_value, AccessRegion};
use super::dcurve::{sample_d_curve, Controls, DCurve, DarbouxChart};
use crate::error::{EngelError, Result};
use crate::numeric::simpson;

/// `|z/w|` at the first grid point above which the integrand is treated as singular.
pub const SINGULAR_RATIO: f64 = 0.1;

/// Residual of `y(T) = z(T)²/(2T) + ∫₀ᵀ z²/(2w²) dt` for a D-curve with
/// `w = t` starting at the origin.
pub fn inaba_identity_check(c: &DCurve) -> Result<f64> {
    if c.chart != DarbouxChart::Standard || c.points.len() < 3 {
        return Err(EngelError::InvalidParameter("need a standard-chart curve with at least two steps".into()));
    }
    let t_end = *c.times.last().unwrap();
    if t_end <= 0.0 {
        return Err(EngelError::InvalidParameter("curve must run forward in time".into()));
    }
    if c.points[0].iter().any(|x| x.abs() > 1e-12) {
        let p = c.points[0];
        return Err(EngelError::SingularIntegrand { ratio: if p[3] == 0.0 { f64::INFINITY } else { p[2] / p[3] } });
    }
    for (t, p) in c.times.iter().zip(&c.points) {
        if (p[3] - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(EngelError::InvalidParameter(format!("curve is not parameterized by w = t (t = {t})")));
        }
    }
    let first = c.points[1];
    let ratio = first[2] / first[3];
    if !(ratio.abs() <= SINGULAR_RATIO) {
        return Err(EngelError::SingularIntegrand { ratio });
    }
    let integrand: Vec<f64> = c
        .points
        .iter()
        .map(|p| if p[3] == 0.0 { 0.0 } else { p[2] * p[2] / (2.0 * p[3] * p[3]) })
        .collect();
    let h = c.times[1] - c.times[0];
    let n = c.times.len();
    let uniform = ((c.times[n - 1] - c.times[n - 2]) - h).abs() < 1e-12 * h;
    let integral = if uniform {
        simpson(&integrand, h)
    } else {
        let last = c.times[n - 1] - c.times[n - 2];
        simpson(&integrand[..n - 1], h) + 0.5 * last * (integrand[n - 2] + integrand[n - 1])
    };
    let e = c.endpoint();
    Ok((e[1] - e[2] * e[2] / (2.0 * t_end) - integral).abs())
}

/// A random smooth control. Admissible ones vanish at `t = 0` to first
/// order; the others may be switched on late or be bounded away from zero.
pub fn random_control(rng: &mut impl Rng, t_total: f64, admissible: bool) -> Controls {
    let c: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
    let freq = rng.random_range(0.5..3.0) * PI / t_total;
    let phase = rng.random_range(0.0..2.0 * PI);
    let smooth = move |t: f64| c[0] + c[1] * (freq * t + phase).sin() + c[2] * t / t_total + c[3] * (2.0 * freq * t).cos();
    if admissible {
        return Controls::graph(move |t| t * smooth(t));
    }
    match rng.random_range(0..3) {
        0 => Controls::graph(smooth),
        1 => {
            let t0 = rng.random_range(0.1..0.7) * t_total;
            Controls::graph(move |t| if t > t0 { (t - t0).powi(2) * smooth(t) } else { 0.0 })
        }
        _ => Controls::graph(move |t| t * smooth(t)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub t_total: f64,
    pub dt: f64,
    pub n_trials: usize,
    pub seed: u64,
    /// Every `trivial_every`-th trial uses `u ≡ 0`; zero disables them.
    pub trivial_every: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { t_total: 1.0, dt: 1e-3, n_trials: 1000, seed: 7, trivial_every: 50 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub trivial: bool,
    pub endpoint: [f64; 4],
    pub region: AccessRegion,
    pub cone_value: f64,
    pub inaba_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonStep {
    pub epsilon: f64,
    pub y_end: f64,
    pub sup_z: f64,
    pub y_over_eps2: f64,
    pub z_over_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub config: ProbeConfig,
    pub trials: Vec<TrialRecord>,
    pub n_a_plus: usize,
    pub n_a_w: usize,
    pub n_a_minus: usize,
    pub n_outside: usize,
    /// `A_W` endpoints occur exactly for the `u ≡ 0` trials.
    pub a_w_iff_trivial: bool,
    /// Largest cone value over the nontrivial trials (negative inside the cone).
    pub max_cone_nontrivial: f64,
    pub sweep: Vec<EpsilonStep>,
    /// `|y(T)|` and `sup |z|` both decrease along the sweep.
    pub sweep_monotone: bool,
}

/// `u = ε sin(πt/T)` with `w = t`: `|y(T)|` and `sup |z|` shrink together.
pub fn epsilon_sweep(t_total: f64, dt: f64, epsilons: &[f64]) -> Result<Vec<EpsilonStep>> {
    epsilons
        .iter()
        .map(|&eps| {
            let c = sample_d_curve(&Controls::graph(move |t| eps * (PI * t / t_total).sin()), t_total, dt, [0.0; 4])?;
            let e = c.endpoint();
            let sup_z = c.points.iter().map(|p| p[2].abs()).fold(0.0, f64::max);
            let (q, r) = if eps == 0.0 { (0.0, 0.0) } else { (e[1] / (eps * eps), e[2] / eps) };
            Ok(EpsilonStep { epsilon: eps, y_end: e[1], sup_z, y_over_eps2: q, z_over_eps: r })
        })
        .collect()
}

/// Random forward D-curves with `w = t` from the origin, classified by the
/// region of their endpoints, plus the ε-sweep of a shrinking family.
pub fn rigidity_probe(cfg: &ProbeConfig) -> Result<ProbeReport> {
    if cfg.n_trials == 0 || cfg.t_total <= 0.0 {
        return Err(EngelError::InvalidParameter("need n_trials ≥ 1 and T > 0".into()));
    }
    let trials: Vec<TrialRecord> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(index as u64);
            let trivial = cfg.trivial_every > 0 && index % cfg.trivial_every == 0;
            let controls = if trivial { Controls::graph(|_| 0.0) } else { random_control(&mut rng, cfg.t_total, index % 2 == 0) };
            let c = sample_d_curve(&controls, cfg.t_total, cfg.dt, [0.0; 4])?;
            let endpoint = c.endpoint();
            Ok(TrialRecord {
                index,
                trivial,
                endpoint,
                region: accessible_membership(&endpoint),
                cone_value: boundary_cone_value(&endpoint),
                inaba_residual: inaba_identity_check(&c).unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<_>>()?;
    let count = |r: AccessRegion| trials.iter().filter(|t| t.region == r).count();
    let a_w_iff_trivial = trials.iter().all(|t| (t.region == AccessRegion::AW) == t.trivial);
    let max_cone_nontrivial = trials.iter().filter(|t| !t.trivial).map(|t| t.cone_value).fold(f64::NEG_INFINITY, f64::max);
    let epsilons: Vec<f64> = (0..=10).map(|k| 0.5f64.powi(k)).collect();
    let sweep = epsilon_sweep(cfg.t_total, cfg.dt, &epsilons)?;
    let sweep_monotone = sweep
        .windows(2)
        .all(|w| w[1].y_end.abs() < w[0].y_end.abs() && w[1].sup_z < w[0].sup_z);
    Ok(ProbeReport {
        config: *cfg,
        n_a_plus: count(AccessRegion::APlus),
        n_a_w: count(AccessRegion::AW),
        n_a_minus: count(AccessRegion::AMinus),
        n_outside: count(AccessRegion::Outside),
        a_w_iff_trivial,
        max_cone_nontrivial,
        trials,
        sweep,
        sweep_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_curve_has_zero_residual() {
        let c = sample_d_curve(&Controls::graph(|_| 0.0), 1.0, 1e-3, [0.0; 4]).unwrap();
        assert_eq!(inaba_identity_check(&c).unwrap(), 0.0);
    }

    #[test]
    fn linear_control_matches_refined_quadrature() {
        let coarse = sample_d_curve(&Controls::graph(|t| t), 1.0, 1e-3, [0.0; 4]).unwrap();
        let fine = sample_d_curve(&Controls::graph(|t| t), 1.0, 1e-5, [0.0; 4]).unwrap();
        assert!(inaba_identity_check(&coarse).unwrap() < 1e-6);
        assert!(inaba_identity_check(&fine).unwrap() < 1e-6);
        // closed form: z = t³/3, y = t⁵/15 at w = t, u = t
        assert!((coarse.endpoint()[1] - 1.0 / 15.0).abs() < 1e-9);
    }

    #[test]
    fn off_origin_start_is_singular() {
        let c = sample_d_curve(&Controls::graph(|_| 1.0), 1.0, 1e-3, [0.0, 0.0, 0.5, 0.0]).unwrap();
        assert!(matches!(inaba_identity_check(&c), Err(EngelError::SingularIntegrand { .. })));
    }

    #[test]
    fn sin_control_lands_in_a_plus() {
        let c = sample_d_curve(&Controls::graph(f64::sin), 1.0, 1e-3, [0.0; 4]).unwrap();
        assert!(boundary_cone_value(&c.endpoint()) < 0.0);
        assert_eq!(accessible_membership(&c.endpoint()), AccessRegion::APlus);
    }

    #[test]
    fn sweep_is_quadratic_in_epsilon() {
        let s = epsilon_sweep(1.0, 1e-3, &[0.0, 0.1, 0.01, 0.001]).unwrap();
        assert_eq!(s[0].y_end, 0.0);
        assert!((s[2].y_over_eps2 - s[3].y_over_eps2).abs() < 1e-9 && s[3].y_over_eps2 > 0.0);
        assert!((s[2].z_over_eps - s[3].z_over_eps).abs() < 1e-9);
    }
}
