//! Small numerical kernels shared by every module: tolerances, quasi-random
//! sampling, classical Runge-Kutta steps and line/plane angle measurements.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Step and tolerance settings for finite differences and rank decisions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericConfig {
    /// Central finite-difference step.
    pub fd_step: f64,
    /// Singular values above this count towards the rank.
    pub rank_tol: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        Self {
            fd_step: 1e-5,
            rank_tol: 1e-8,
        }
    }
}

/// Rank of a stacked family of vectors together with its singular spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Set when some singular value sits within a decade of the tolerance.
    pub marginal: bool,
}

/// Number of singular values above `tol`, flagging near-threshold spectra.
pub fn rank_report(vectors: &[DVector<f64>], tol: f64) -> RankReport {
    let dim = vectors[0].len();
    let mut m = DMatrix::<f64>::zeros(dim, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, v);
    }
    let mut singular_values: Vec<f64> = m.singular_values().iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let rank = singular_values.iter().filter(|&&s| s > tol).count();
    let marginal = singular_values
        .iter()
        .any(|&s| s > tol / 10.0 && s < tol * 10.0);
    RankReport {
        rank,
        singular_values,
        marginal,
    }
}

/// Angle in `[0, π/2]` between the lines spanned by `u` and `v`.
pub fn line_angle(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let (nu, nv) = (u.norm(), v.norm());
    if nu == 0.0 || nv == 0.0 {
        return f64::NAN;
    }
    let (a, b) = (u / nu, v / nv);
    let d = (&a - &b).norm().min((&a + &b).norm());
    2.0 * (0.5 * d).min(1.0).asin()
}

/// Angle between `v` and the subspace spanned by `span`.
pub fn angle_to_span(v: &DVector<f64>, span: &[DVector<f64>]) -> f64 {
    let basis = orthonormal_basis(span);
    let mut proj = DVector::zeros(v.len());
    for e in &basis {
        proj += e * e.dot(v);
    }
    let resid = v - &proj;
    resid.norm().atan2(proj.norm())
}

/// Largest principal angle between two subspaces of equal dimension.
pub fn subspace_angle(a: &[DVector<f64>], b: &[DVector<f64>]) -> f64 {
    let basis_a = orthonormal_basis(a);
    basis_a
        .iter()
        .map(|v| angle_to_span(v, b))
        .fold(0.0, f64::max)
}

/// Modified Gram-Schmidt, dropping numerically dependent directions.
pub fn orthonormal_basis(span: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let scale = span.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(span.len());
    for v in span {
        let mut w = v.clone();
        for _ in 0..2 {
            for e in &basis {
                let c = e.dot(&w);
                w -= e * c;
            }
        }
        let n = w.norm();
        if n > 1e-12 * scale.max(1.0) {
            basis.push(w / n);
        }
    }
    basis
}

/// Coefficients of `v` in the (possibly non-orthogonal) basis `basis`,
/// solved in the least-squares sense.
pub fn decompose(v: &DVector<f64>, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    let mut m = DMatrix::<f64>::zeros(v.len(), basis.len());
    for (j, b) in basis.iter().enumerate() {
        m.set_column(j, b);
    }
    m.svd(true, true).solve(v, 1e-14).ok()
}

/// Radical-inverse Halton sequence in `[0,1)^dim`, skipping the first `skip` terms.
pub fn halton_points(dim: usize, n: usize, skip: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    assert!(dim <= PRIMES.len(), "halton sequence supports up to 8 dimensions");
    (0..n)
        .map(|i| {
            let index = (i + skip + 1) as u64;
            PRIMES[..dim]
                .iter()
                .map(|&base| radical_inverse(index, base))
                .collect()
        })
        .collect()
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Map unit-cube samples onto an axis-aligned box.
pub fn scale_to_box(unit: &[Vec<f64>], bounds: &[(f64, f64)]) -> Vec<Vec<f64>> {
    unit.iter()
        .map(|u| {
            u.iter()
                .zip(bounds)
                .map(|(s, (lo, hi))| lo + s * (hi - lo))
                .collect()
        })
        .collect()
}

/// One classical fourth-order Runge-Kutta step of `y' = f(y)`.
pub fn rk4_step<E>(
    y: &[f64],
    h: f64,
    f: &mut impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
) -> Result<Vec<f64>, E> {
    let k1 = f(y)?;
    let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = f(&y2)?;
    let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = f(&y3)?;
    let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = f(&y4)?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Time-dependent variant of [`rk4_step`] for `y' = f(t, y)`.
pub fn rk4_step_t<E>(
    t: f64,
    y: &[f64],
    h: f64,
    f: &mut impl FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
) -> Result<Vec<f64>, E> {
    let k1 = f(t, y)?;
    let y2: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = f(t + 0.5 * h, &y2)?;
    let y3: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = f(t + 0.5 * h, &y3)?;
    let y4: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = f(t + h, &y4)?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, a)| a + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Uniform time grid on `[0, T]` (or `[T, 0]` for negative `T`) with step
/// magnitude at most `dt`; the final step is shortened to land on `T`.
pub fn time_grid(total: f64, dt: f64) -> Vec<f64> {
    let n_full = (total.abs() / dt).floor() as usize;
    let sign = total.signum();
    let mut grid: Vec<f64> = (0..=n_full).map(|i| sign * i as f64 * dt).collect();
    let last = *grid.last().unwrap();
    if (total - last).abs() > 1e-12 * dt.max(total.abs()) {
        grid.push(total);
    } else if let Some(l) = grid.last_mut() {
        *l = total;
    }
    grid
}

/// Composite Simpson rule on an evenly spaced grid. An even point count
/// closes with the 3/8 rule on the last three intervals.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => return 0.0,
        2 => return 0.5 * h * (values[0] + values[1]),
        4 => return 3.0 * h / 8.0 * (values[0] + 3.0 * values[1] + 3.0 * values[2] + values[3]),
        _ => {}
    }
    let (odd_part, tail) = if n % 2 == 1 {
        (n, 0.0)
    } else {
        let v = &values[n - 4..];
        (n - 3, 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]))
    };
    let mut s = values[0] + values[odd_part - 1];
    for (i, v) in values.iter().enumerate().take(odd_part - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0 + tail
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Golub-Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        jac[(k - 1, k)] = b;
        jac[(k, k - 1)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `∫ₐᵇ f` by composite Gauss-Legendre with the given rule on `panels` panels.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>), panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            s += w * f(mid + 0.5 * h * x);
        }
    }
    0.5 * h * s
}

#[cfg(test)]
mod tests {
    use super::*;
    const PI_TEST: f64 = std::f64::consts::PI;

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        let rule = gauss_legendre(8);
        assert!((rule.1.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let v = integrate_gl(|x| x.powi(15) + x.powi(14), 0.0, 1.0, &rule, 1);
        assert!((v - (1.0 / 16.0 + 1.0 / 15.0)).abs() < 1e-14);
        let v = integrate_gl(f64::sin, 0.0, PI_TEST, &rule, 4);
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn halton_is_in_unit_cube_and_deterministic() {
        let a = halton_points(4, 100, 20);
        let b = halton_points(4, 100, 20);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn line_angle_ignores_orientation() {
        let u = DVector::from_vec(vec![1.0, 0.0]);
        let v = DVector::from_vec(vec![-2.0, 0.0]);
        assert!(line_angle(&u, &v) < 1e-15);
        let w = DVector::from_vec(vec![1.0, 1.0]);
        assert!((line_angle(&u, &w) - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn rank_of_dependent_family() {
        let v = vec![
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            DVector::from_vec(vec![1.0, 1.0, 0.0]),
        ];
        let r = rank_report(&v, 1e-8);
        assert_eq!(r.rank, 2);
        assert!(!r.marginal);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let h = 0.01;
        let vals: Vec<f64> = (0..=100).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&vals, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn time_grid_lands_on_endpoint() {
        let g = time_grid(1.05, 0.1);
        assert_eq!(g.len(), 12);
        assert_eq!(*g.last().unwrap(), 1.05);
        let g = time_grid(-1.0, 0.25);
        assert_eq!(g, vec![0.0, -0.25, -0.5, -0.75, -1.0]);
    }
}
