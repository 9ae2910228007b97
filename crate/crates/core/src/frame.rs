//! Vector fields on chart boxes, constant-coefficient Lie models, and the
//! bracket/rank primitives everything else is built from.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{EngelError, Result};
use crate::numeric::{halton_points, rank_report, scale_to_box, NumericConfig, RankReport};

pub type FieldFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Extent of a single chart coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Coord {
    Interval { lo: f64, hi: f64 },
    /// Angle-like coordinate; fields are expected to be periodic in it.
    Periodic { period: f64 },
}

/// Coordinate box of a chart plus the sub-box used for quasi-random sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub names: Vec<String>,
    pub coords: Vec<Coord>,
    pub sample_box: Vec<(f64, f64)>,
}

impl ChartDomain {
    pub fn new(names: &[&str], coords: Vec<Coord>, sample_box: Vec<(f64, f64)>) -> Arc<Self> {
        assert_eq!(names.len(), coords.len());
        assert_eq!(names.len(), sample_box.len());
        Arc::new(Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            coords,
            sample_box,
        })
    }

    /// The box `[lo, hi]^dim` with every coordinate an interval.
    pub fn cube(names: &[&str], lo: f64, hi: f64) -> Arc<Self> {
        let n = names.len();
        Self::new(names, vec![Coord::Interval { lo, hi }; n], vec![(lo, hi); n])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(&self.coords).all(|(x, c)| match *c {
                Coord::Interval { lo, hi } => (lo..=hi).contains(x),
                Coord::Periodic { .. } => x.is_finite(),
            })
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim() {
            return Err(EngelError::DimensionMismatch {
                expected: self.dim(),
                got: p.len(),
            });
        }
        if !self.contains(p) {
            return Err(EngelError::DomainViolation { point: p.to_vec() });
        }
        Ok(())
    }

    /// Deterministic Halton sample of the sampling box.
    pub fn sample(&self, n: usize, skip: usize) -> Vec<Vec<f64>> {
        scale_to_box(&halton_points(self.dim(), n, skip), &self.sample_box)
    }

    /// Euclidean distance with periodic coordinates compared modulo their period.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.coords)
            .map(|((x, y), c)| {
                let d = x - y;
                match *c {
                    Coord::Interval { .. } => d * d,
                    Coord::Periodic { period } => {
                        let r = d - period * (d / period).round();
                        r * r
                    }
                }
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A smooth vector field on a chart, given by its coordinate components.
#[derive(Clone)]
pub struct ChartVectorField {
    pub domain: Arc<ChartDomain>,
    components: FieldFn,
    jacobian: Option<JacobianFn>,
}

impl fmt::Debug for ChartVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartVectorField")
            .field("dim", &self.dim())
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl ChartVectorField {
    pub fn new(
        domain: &Arc<ChartDomain>,
        components: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            domain: domain.clone(),
            components: Arc::new(components),
            jacobian: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    /// The coordinate field `∂/∂x_i`.
    pub fn coordinate(domain: &Arc<ChartDomain>, i: usize) -> Self {
        let n = domain.dim();
        Self::new(domain, move |_| {
            let mut v = DVector::zeros(n);
            v[i] = 1.0;
            v
        })
        .with_jacobian(move |_| DMatrix::zeros(n, n))
    }

    /// `Σ f_k(p) V_k(p)` for scalar coefficient functions `f_k`.
    pub fn combination(domain: &Arc<ChartDomain>, terms: Vec<(ScalarFn, ChartVectorField)>) -> Self {
        let n = domain.dim();
        Self::new(domain, move |p| {
            let mut v = DVector::zeros(n);
            for (f, field) in &terms {
                v += (field.components)(p) * f(p);
            }
            v
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    /// Components at `p`, failing outside the chart box or on NaN/inf.
    pub fn eval(&self, p: &[f64]) -> Result<DVector<f64>> {
        self.domain.check(p)?;
        self.eval_unchecked(p)
    }

    /// Components at `p` without the domain test (used by finite differences,
    /// whose stencil may poke a step outside the closed box).
    pub fn eval_unchecked(&self, p: &[f64]) -> Result<DVector<f64>> {
        let v = (self.components)(p);
        if v.len() != self.dim() {
            return Err(EngelError::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(EngelError::NonFiniteEvaluation { point: p.to_vec() });
        }
        Ok(v)
    }

    /// Derivative matrix `∂V_i/∂x_j`, analytic when available.
    pub fn jacobian(&self, p: &[f64], h: f64) -> Result<DMatrix<f64>> {
        match &self.jacobian {
            Some(j) => {
                let m = j(p);
                if m.iter().any(|x| !x.is_finite()) {
                    return Err(EngelError::NonFiniteEvaluation { point: p.to_vec() });
                }
                Ok(m)
            }
            None => self.fd_jacobian(p, h),
        }
    }

    /// Central finite-difference derivative matrix.
    pub fn fd_jacobian(&self, p: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut q = p.to_vec();
        for j in 0..n {
            q[j] = p[j] + h;
            let plus = self.eval_unchecked(&q)?;
            q[j] = p[j] - h;
            let minus = self.eval_unchecked(&q)?;
            q[j] = p[j];
            m.set_column(j, &((plus - minus) / (2.0 * h)));
        }
        Ok(m)
    }
}

/// `[a, b] = Db·a − Da·b` at `p`.
pub fn bracket_chart(
    a: &ChartVectorField,
    b: &ChartVectorField,
    p: &[f64],
    cfg: &NumericConfig,
) -> Result<DVector<f64>> {
    if a.dim() != b.dim() {
        return Err(EngelError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let va = a.eval(p)?;
    let vb = b.eval(p)?;
    b.domain.check(p)?;
    let da = a.jacobian(p, cfg.fd_step)?;
    let db = b.jacobian(p, cfg.fd_step)?;
    Ok(db * va - da * vb)
}

/// Lie algebra given by structure constants `[e_i, e_j] = Σ_k c[k][i][j] e_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieModel {
    pub names: Vec<String>,
    constants: Vec<f64>,
    pub curvature_parameter: Option<f64>,
}

impl LieModel {
    /// `constants` is the flattened `c[k][i][j]` array; it must be antisymmetric in `i, j`.
    pub fn new(names: &[&str], constants: Vec<f64>, curvature_parameter: Option<f64>) -> Result<Self> {
        let n = names.len();
        if constants.len() != n * n * n {
            return Err(EngelError::DimensionMismatch {
                expected: n * n * n,
                got: constants.len(),
            });
        }
        let model = Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            constants,
            curvature_parameter,
        };
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if (model.c(k, i, j) + model.c(k, j, i)).abs() > 1e-12 {
                        return Err(EngelError::InvalidParameter(format!(
                            "structure constants are not antisymmetric at ({k},{i},{j})"
                        )));
                    }
                }
            }
        }
        Ok(model)
    }

    /// Build from the nonzero brackets `[e_i, e_j] = Σ coef e_k`, listed once per unordered pair.
    pub fn from_brackets(
        names: &[&str],
        brackets: &[(usize, usize, &[(usize, f64)])],
        curvature_parameter: Option<f64>,
    ) -> Result<Self> {
        let n = names.len();
        let mut c = vec![0.0; n * n * n];
        for &(i, j, terms) in brackets {
            for &(k, coef) in terms {
                c[(k * n + i) * n + j] += coef;
                c[(k * n + j) * n + i] -= coef;
            }
        }
        Self::new(names, c, curvature_parameter)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn c(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.constants[(k * n + i) * n + j]
    }

    /// Basis vector `e_i` as a coefficient vector.
    pub fn basis(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[i] = 1.0;
        v
    }

    /// Exact contraction with the structure constants.
    pub fn bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.dim();
        for x in [u, v] {
            if x.len() != n {
                return Err(EngelError::DimensionMismatch {
                    expected: n,
                    got: x.len(),
                });
            }
        }
        let mut out = DVector::zeros(n);
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    s += self.c(k, i, j) * u[i] * v[j];
                }
            }
            out[k] = s;
        }
        Ok(out)
    }

    /// Largest coefficient of the cyclic Jacobi sum over all basis triples.
    pub fn jacobi_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let (ea, eb, ec) = (self.basis(a), self.basis(b), self.basis(c));
                    let br = |x: &DVector<f64>, y: &DVector<f64>| self.bracket(x, y).expect("basis dims");
                    let s = br(&ea, &br(&eb, &ec)) + br(&eb, &br(&ec, &ea)) + br(&ec, &br(&ea, &eb));
                    worst = worst.max(s.amax());
                }
            }
        }
        worst
    }
}

/// Convenience for [`LieModel::bracket`].
pub fn bracket_lie(m: &LieModel, u: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    m.bracket(u, v)
}

/// A global frame on a chart, carried as named coordinate fields.
#[derive(Clone, Debug)]
pub struct ChartFrame {
    pub domain: Arc<ChartDomain>,
    pub names: Vec<String>,
    pub fields: Vec<ChartVectorField>,
}

/// A parallelizable model: either chart fields or an abstract Lie frame.
#[derive(Clone, Debug)]
pub enum FrameModel {
    Chart(ChartFrame),
    Lie(Arc<LieModel>),
}

impl FrameModel {
    /// The coordinate frame of a chart.
    pub fn coordinate_chart(domain: &Arc<ChartDomain>) -> Self {
        FrameModel::Chart(ChartFrame {
            domain: domain.clone(),
            names: domain.names.iter().map(|n| format!("d/d{n}")).collect(),
            fields: (0..domain.dim())
                .map(|i| ChartVectorField::coordinate(domain, i))
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            FrameModel::Chart(c) => c.domain.dim(),
            FrameModel::Lie(m) => m.dim(),
        }
    }

    pub fn domain(&self) -> Option<&Arc<ChartDomain>> {
        match self {
            FrameModel::Chart(c) => Some(&c.domain),
            FrameModel::Lie(_) => None,
        }
    }

    /// Quasi-random sample points. Lie models are homogeneous, so their
    /// points are canonical coordinates in `[-1,1]^n` and only label orbits.
    pub fn sample_points(&self, n: usize, skip: usize) -> Vec<Vec<f64>> {
        match self {
            FrameModel::Chart(c) => c.domain.sample(n, skip),
            FrameModel::Lie(m) => scale_to_box(
                &halton_points(m.dim(), n, skip),
                &vec![(-1.0, 1.0); m.dim()],
            ),
        }
    }

    pub fn bracket(&self, a: &Section, b: &Section, p: &[f64], cfg: &NumericConfig) -> Result<DVector<f64>> {
        match (self, a, b) {
            (FrameModel::Chart(_), Section::Chart(x), Section::Chart(y)) => bracket_chart(x, y, p, cfg),
            (FrameModel::Lie(m), Section::Lie(x), Section::Lie(y)) => m.bracket(x, y),
            _ => Err(EngelError::ModelMismatch),
        }
    }
}

/// A section of `TM` written against the model's frame.
#[derive(Clone, Debug)]
pub enum Section {
    Chart(ChartVectorField),
    Lie(DVector<f64>),
}

impl Section {
    pub fn eval(&self, p: &[f64]) -> Result<DVector<f64>> {
        match self {
            Section::Chart(f) => f.eval(p),
            Section::Lie(v) => Ok(v.clone()),
        }
    }

    pub fn lie(coefs: &[f64]) -> Self {
        Section::Lie(DVector::from_column_slice(coefs))
    }

    pub fn as_chart(&self) -> Option<&ChartVectorField> {
        match self {
            Section::Chart(f) => Some(f),
            Section::Lie(_) => None,
        }
    }
}

/// A distribution given by spanning sections.
#[derive(Clone, Debug)]
pub struct DistributionSpec {
    pub model: FrameModel,
    pub span: Vec<Section>,
}

impl DistributionSpec {
    pub fn eval(&self, p: &[f64]) -> Result<Vec<DVector<f64>>> {
        self.span.iter().map(|s| s.eval(p)).collect()
    }

    /// Whether the spanning sections are independent at every sampled point.
    pub fn independent_at(&self, points: &[Vec<f64>], tol: f64) -> Result<bool> {
        for p in points {
            let v = self.eval(p)?;
            if distribution_rank(&v, tol)? < v.len() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Number of singular values above `tol` of the stacked vectors.
pub fn distribution_rank(vectors: &[DVector<f64>], tol: f64) -> Result<usize> {
    Ok(distribution_rank_report(vectors, tol)?.rank)
}

/// [`distribution_rank`] with the full spectrum and the marginal flag.
pub fn distribution_rank_report(vectors: &[DVector<f64>], tol: f64) -> Result<RankReport> {
    let first = vectors.first().ok_or(EngelError::EmptyInput)?;
    if let Some(bad) = vectors.iter().find(|v| v.len() != first.len()) {
        return Err(EngelError::DimensionMismatch {
            expected: first.len(),
            got: bad.len(),
        });
    }
    Ok(rank_report(vectors, tol))
}

/// Spanning vectors of `A + [A, A]` at `p`: the sections of `A` followed by
/// those pairwise brackets that raise the rank.
pub fn derived_distribution(d: &DistributionSpec, p: &[f64], cfg: &NumericConfig) -> Result<Vec<DVector<f64>>> {
    let mut span = d.eval(p)?;
    let mut rank = distribution_rank(&span, cfg.rank_tol)?;
    for i in 0..d.span.len() {
        for j in i + 1..d.span.len() {
            let b = d.model.bracket(&d.span[i], &d.span[j], p, cfg)?;
            span.push(b);
            let r = distribution_rank(&span, cfg.rank_tol)?;
            if r > rank {
                rank = r;
            } else {
                span.pop();
            }
        }
    }
    Ok(span)
}

/// All pairwise brackets of the given sections at `p`, prefixed by the sections themselves.
pub fn span_with_brackets(
    model: &FrameModel,
    sections: &[Section],
    p: &[f64],
    cfg: &NumericConfig,
) -> Result<Vec<DVector<f64>>> {
    let mut out: Vec<DVector<f64>> = sections.iter().map(|s| s.eval(p)).collect::<Result<_>>()?;
    for i in 0..sections.len() {
        for j in i + 1..sections.len() {
            out.push(model.bracket(&sections[i], &sections[j], p, cfg)?);
        }
    }
    Ok(out)
}
