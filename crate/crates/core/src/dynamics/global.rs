//! Finite-time estimate of the global type of the `W`-action on `E/W`.
//!
//! The definitions quantify over all times and all orbits; everything here is
//! a sampled estimate and the evidence record says so.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix2, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orbit::{characteristic_orbit, pulled_back, sigma_max, unwrap_line, OrbitTrace, STEP_GUARD};
use crate::engel::EngelStructure;
use crate::error::{EngelError, Result};

/// Thresholds of the estimator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub t_max: f64,
    pub dt: f64,
    /// Minimal slope of `log σ₁(t)` for exponential growth.
    pub c_min: f64,
    /// Minimal coefficient of determination of the growth fits.
    pub r2_min: f64,
    /// Bound on the conformal distortion for the elliptic verdict.
    pub distortion_bound: f64,
    /// Angular margin (radians) used when counting crossings of invariant lines.
    pub crossing_margin: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            t_max: 50.0,
            dt: 0.01,
            c_min: 0.05,
            r2_min: 0.99,
            distortion_bound: 1e3,
            crossing_margin: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GlobalType {
    Elliptic,
    Parabolic { genuine: bool },
    Hyperbolic { genuine: bool },
    Unknown,
}

impl fmt::Display for GlobalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = |b: bool| if b { "genuine" } else { "trans" };
        match self {
            GlobalType::Elliptic => write!(f, "Elliptic"),
            GlobalType::Parabolic { genuine } => write!(f, "Parabolic ({})", g(*genuine)),
            GlobalType::Hyperbolic { genuine } => write!(f, "Hyperbolic ({})", g(*genuine)),
            GlobalType::Unknown => write!(f, "Unknown"),
        }
    }
}

/// Growth fits on one time direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub log_sigma_slope: f64,
    pub log_sigma_r2: f64,
    pub sigma_slope: f64,
    pub sigma_r2: f64,
    pub sigma_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitEvidence {
    pub start: Vec<f64>,
    pub t_range: [f64; 2],
    pub truncated: bool,
    pub forward: GrowthFit,
    pub backward: GrowthFit,
    pub max_distortion: f64,
    /// Angles in the quotient frame over the start point of the line
    /// contracted in forward time (`l^s`) and the one contracted in backward
    /// time (`l^u`).
    pub stable_line: f64,
    pub unstable_line: f64,
    /// Sign applied to raw angles so the developing angle increases.
    pub orientation: f64,
    /// Range of the oriented developing angle over the orbit.
    pub developing_range: [f64; 2],
    pub crossings: usize,
    pub verdict: GlobalType,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalEstimate {
    pub structure: String,
    pub kind: GlobalType,
    pub config: EstimatorConfig,
    pub orbits: Vec<OrbitEvidence>,
    pub note: String,
}

/// Least squares line fit; returns `(slope, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.len() < 3 {
        return (f64::NAN, f64::NAN);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 0.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Transport samples `(t, M, log det M, D/W)` along one orbit.
struct Samples {
    t: Vec<f64>,
    m: Vec<Matrix2<f64>>,
    log_det: Vec<f64>,
    d: Vec<[f64; 2]>,
    truncated: bool,
}

fn d_along(s: &EngelStructure, o: &OrbitTrace) -> Result<Vec<[f64; 2]>> {
    o.points
        .iter()
        .zip(&o.times)
        .map(|(p, &t)| s.d_mod_w(p).map_err(|_| EngelError::FrameDegenerate { t }))
        .collect()
}

/// Orbit over `[0, T]`, shortened if it leaves the chart.
fn orbit_until_exit(s: &EngelStructure, p0: &[f64], t_total: f64, dt: f64) -> Result<(OrbitTrace, bool)> {
    match characteristic_orbit(s, p0, t_total, dt) {
        Err(EngelError::ChartExit { t_exit }) => {
            let shorter = t_exit.abs() - 4.0 * dt;
            if shorter < 1.0 {
                return Err(EngelError::ChartExit { t_exit });
            }
            Ok((characteristic_orbit(s, p0, shorter * t_total.signum(), dt)?, true))
        }
        other => other.map(|o| (o, false)),
    }
}

fn collect_samples(s: &EngelStructure, p0: &[f64], cfg: &EstimatorConfig) -> Result<Samples> {
    if let Some(tau) = s.flow_period {
        let n = ((tau / cfg.dt).ceil() as usize).max(1);
        let one = characteristic_orbit(s, p0, tau, tau / n as f64)?;
        let d = d_along(s, &one)?;
        let last = one.len() - 1;
        let (period_m, period_ld) = (one.matrix(last), one.log_det[last]);
        let k_max = (cfg.t_max / tau).ceil() as i64;
        let inv = Matrix2::new(period_m[(1, 1)], -period_m[(0, 1)], -period_m[(1, 0)], period_m[(0, 0)])
            * (-period_ld).exp();
        let mut out = Samples { t: vec![], m: vec![], log_det: vec![], d: vec![], truncated: false };
        let mut power = Matrix2::identity();
        let mut powers = vec![(0i64, power)];
        for k in 1..=k_max {
            power *= period_m;
            powers.push((k, power));
        }
        let mut power = Matrix2::identity();
        for k in 1..=k_max {
            power *= inv;
            powers.push((-k, power));
        }
        powers.sort_by_key(|(k, _)| *k);
        for (k, pk) in powers {
            if k == k_max {
                out.t.push(k as f64 * tau);
                out.m.push(one.matrix(0) * pk);
                out.log_det.push(k as f64 * period_ld);
                out.d.push(d[0]);
                break;
            }
            for j in 0..last {
                out.t.push(k as f64 * tau + one.times[j]);
                out.m.push(one.matrix(j) * pk);
                out.log_det.push(one.log_det[j] + k as f64 * period_ld);
                out.d.push(d[j]);
            }
        }
        return Ok(out);
    }
    let (fwd, tf) = orbit_until_exit(s, p0, cfg.t_max, cfg.dt)?;
    let (bwd, tb) = orbit_until_exit(s, p0, -cfg.t_max, cfg.dt)?;
    let (df, db) = (d_along(s, &fwd)?, d_along(s, &bwd)?);
    let mut out = Samples { t: vec![], m: vec![], log_det: vec![], d: vec![], truncated: tf || tb };
    for i in (1..bwd.len()).rev() {
        out.t.push(bwd.times[i]);
        out.m.push(bwd.matrix(i));
        out.log_det.push(bwd.log_det[i]);
        out.d.push(db[i]);
    }
    for i in 0..fwd.len() {
        out.t.push(fwd.times[i]);
        out.m.push(fwd.matrix(i));
        out.log_det.push(fwd.log_det[i]);
        out.d.push(df[i]);
    }
    Ok(out)
}

/// Line contracted by `M`: orthogonal to the top right singular vector.
fn contracted_line(m: &Matrix2<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.transpose() * m);
    let top = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
    let v = eig.eigenvectors.column(top);
    (v[0]).atan2(-v[1]).rem_euclid(PI)
}

fn growth(t: &[f64], sigma: &[f64], sign: f64, t_max: f64) -> GrowthFit {
    let (mut x, mut ly, mut y) = (vec![], vec![], vec![]);
    let mut end = (f64::NEG_INFINITY, f64::NAN);
    let stride = (t.len() / 400).max(1);
    for (i, (&ti, &si)) in t.iter().zip(sigma).enumerate() {
        let tt = sign * ti;
        if tt >= t_max / 4.0 && i % stride == 0 {
            x.push(tt);
            ly.push(si.ln());
            y.push(si);
        }
        if tt > end.0 {
            end = (tt, si);
        }
    }
    let (ls, lr) = linear_fit(&x, &ly);
    let (ss, sr) = linear_fit(&x, &y);
    GrowthFit {
        log_sigma_slope: ls,
        log_sigma_r2: lr,
        sigma_slope: ss,
        sigma_r2: sr,
        sigma_end: end.1,
    }
}

fn growth_verdict(g: &GrowthFit, max_distortion: f64, cfg: &EstimatorConfig) -> GlobalType {
    if g.log_sigma_slope > cfg.c_min && g.log_sigma_r2 > cfg.r2_min {
        GlobalType::Hyperbolic { genuine: true }
    } else if g.sigma_slope > 0.0 && g.sigma_r2 > cfg.r2_min && g.sigma_end > 2.0 {
        GlobalType::Parabolic { genuine: true }
    } else if max_distortion <= cfg.distortion_bound {
        GlobalType::Elliptic
    } else {
        GlobalType::Unknown
    }
}

/// Number of lifts `line + kπ` strictly inside `(lo + margin, hi − margin)`.
fn crossings(line: f64, lo: f64, hi: f64, margin: f64) -> usize {
    let (a, b) = (lo + margin, hi - margin);
    if b <= a {
        return 0;
    }
    let first = ((a - line) / PI).ceil();
    let last = ((b - line) / PI).floor();
    (last - first + 1.0).max(0.0) as usize
}

fn midpoint_line(a: f64, b: f64) -> f64 {
    let d = b - a;
    let d = d - PI * (d / PI).round();
    a + d / 2.0
}

/// Evidence for a single orbit through `p0`.
pub fn orbit_evidence(s: &EngelStructure, p0: &[f64], cfg: &EstimatorConfig) -> Result<OrbitEvidence> {
    let smp = collect_samples(s, p0, cfg)?;
    let n = smp.t.len();
    let mut raw = Vec::with_capacity(n);
    for i in 0..n {
        let u = pulled_back(&smp.m[i], smp.d[i])?;
        let a = u[1].atan2(u[0]);
        let a = match raw.last() {
            None => a,
            Some(&prev) => {
                let next = unwrap_line(prev, a);
                if (next - prev).abs() > STEP_GUARD {
                    return Err(EngelError::StepTooLarge { t: smp.t[i], increment: next - prev });
                }
                next
            }
        };
        raw.push(a);
    }
    let orientation = if raw[n - 1] >= raw[0] { 1.0 } else { -1.0 };
    let oriented: Vec<f64> = raw.iter().map(|a| orientation * a).collect();
    let lo = oriented.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = oriented.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let sigma: Vec<f64> = smp.m.iter().zip(&smp.log_det).map(|(m, l)| sigma_max(m, *l)).collect();
    let max_distortion = sigma.iter().map(|s| s * s).fold(0.0, f64::max);
    let t_end = smp.t[n - 1];
    let t_start = smp.t[0];
    let split = smp.t.iter().position(|&t| t >= 0.0).unwrap_or(0);
    let forward = growth(&smp.t[split..], &sigma[split..], 1.0, t_end);
    let backward = growth(&smp.t[..=split], &sigma[..=split], -1.0, -t_start);
    let vf = growth_verdict(&forward, max_distortion, cfg);
    let vb = growth_verdict(&backward, max_distortion, cfg);

    let stable = contracted_line(&smp.m[n - 1]);
    let unstable = contracted_line(&smp.m[0]);
    let flip = |a: f64| (orientation * a).rem_euclid(PI);
    let (verdict, count) = match (vf, vb) {
        (GlobalType::Hyperbolic { .. }, GlobalType::Hyperbolic { .. }) => {
            let c = crossings(flip(stable), lo, hi, cfg.crossing_margin)
                + crossings(flip(unstable), lo, hi, cfg.crossing_margin);
            (GlobalType::Hyperbolic { genuine: c == 0 }, c)
        }
        (GlobalType::Parabolic { .. }, GlobalType::Parabolic { .. }) => {
            let c = crossings(flip(midpoint_line(stable, unstable)), lo, hi, cfg.crossing_margin);
            (GlobalType::Parabolic { genuine: c == 0 }, c)
        }
        (GlobalType::Elliptic, GlobalType::Elliptic) => (GlobalType::Elliptic, 0),
        _ => (GlobalType::Unknown, 0),
    };
    Ok(OrbitEvidence {
        start: p0.to_vec(),
        t_range: [t_start, t_end],
        truncated: smp.truncated,
        forward,
        backward,
        max_distortion,
        stable_line: stable,
        unstable_line: unstable,
        orientation,
        developing_range: [lo, hi],
        crossings: count,
        verdict,
    })
}

/// Estimate the global type from `n_orbits` sampled orbits over `[−T, T]`.
pub fn estimate_global_type(s: &EngelStructure, n_orbits: usize, cfg: &EstimatorConfig) -> Result<GlobalEstimate> {
    if n_orbits == 0 {
        return Err(EngelError::InvalidParameter("n_orbits must be at least 1".into()));
    }
    let starts = s.sample_points(n_orbits);
    let results: Vec<Result<OrbitEvidence>> = starts.par_iter().map(|p| orbit_evidence(s, p, cfg)).collect();
    let mut orbits = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => orbits.push(e),
            Err(e) => failures.push(e.to_string()),
        }
    }
    let mut note = String::new();
    let kind = if orbits.is_empty() {
        note = format!("no orbit could be analyzed: {}", failures.join("; "));
        GlobalType::Unknown
    } else {
        let first = orbits[0].verdict;
        let same_family = orbits.iter().all(|o| std::mem::discriminant(&o.verdict) == std::mem::discriminant(&first));
        if !same_family {
            note = "orbits disagree on the type".into();
            GlobalType::Unknown
        } else {
            match first {
                GlobalType::Hyperbolic { .. } | GlobalType::Parabolic { .. } => {
                    let genuine: Vec<bool> = orbits
                        .iter()
                        .map(|o| matches!(o.verdict, GlobalType::Hyperbolic { genuine: true } | GlobalType::Parabolic { genuine: true }))
                        .collect();
                    if genuine.iter().all(|&g| g) || genuine.iter().all(|&g| !g) {
                        match first {
                            GlobalType::Hyperbolic { .. } => GlobalType::Hyperbolic { genuine: genuine[0] },
                            _ => GlobalType::Parabolic { genuine: genuine[0] },
                        }
                    } else {
                        note = "orbits disagree on genuine versus trans".into();
                        GlobalType::Unknown
                    }
                }
                other => other,
            }
        }
    };
    if !failures.is_empty() && note.is_empty() {
        note = format!("{} orbit(s) skipped: {}", failures.len(), failures.join("; "));
    }
    if orbits.iter().any(|o| o.truncated) {
        if !note.is_empty() {
            note.push_str("; ");
        }
        note.push_str("some orbits left the chart before T and were shortened");
    }
    Ok(GlobalEstimate { structure: s.name.clone(), kind, config: *cfg, orbits, note })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_lines() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 3.0 * t - 1.0).collect();
        let (s, r2) = linear_fit(&x, &y);
        assert!((s - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_count() {
        assert_eq!(crossings(PI / 2.0, -1.4, 1.4, 0.05), 0);
        assert_eq!(crossings(PI / 2.0, 0.0, 4.0, 0.05), 1);
        assert_eq!(crossings(0.0, 0.1, 7.0, 0.05), 2);
    }

    #[test]
    fn contracted_line_of_diagonal() {
        let m = Matrix2::new(1e20, 0.0, 0.0, 1e-20);
        assert!((contracted_line(&m) - PI / 2.0).abs() < 1e-12);
    }
}
