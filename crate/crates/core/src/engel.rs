//! Engel structures, their numerical verification and the Cauchy characteristic.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EngelError, Result};
use crate::frame::{
    distribution_rank_report, span_with_brackets, ChartDomain, ChartVectorField, Coord, FrameModel, Section,
};
use crate::numeric::{angle_to_span, decompose, line_angle, NumericConfig};

/// Angle tolerance for the Cauchy line and the flag inclusion `W ⊂ D`.
pub const CAUCHY_ANGLE_TOL: f64 = 1e-6;

/// Which construction produced a structure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Darboux,
    LongDarboux,
    Cartan,
    LorentzProduct { kappa: Option<f64> },
    LorentzMagnetic { kappa: Option<f64> },
    Prequantum,
    Propellor { monodromy: [[i64; 2]; 2] },
    Suspension { twists: i64 },
    Counterexample,
}

/// A candidate Engel structure with its designated flag `W ⊂ D ⊂ E`.
#[derive(Clone, Debug)]
pub struct EngelStructure {
    pub name: String,
    pub model: FrameModel,
    pub d_span: Vec<Section>,
    pub e_span: Vec<Section>,
    pub w: Section,
    /// Spans `TM/E`; the skew pairing on `E` is read off along it.
    pub transverse: Section,
    /// Two sections of `E` completing `W` to a frame; their classes frame `E/W`.
    pub quotient_frame: [Section; 2],
    pub provenance: Provenance,
    /// Set when the transport data along every `W`-orbit repeats with this
    /// period (mapping-torus models whose gluing preserves the `E/W` frame).
    pub flow_period: Option<f64>,
}

impl EngelStructure {
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn sample_points(&self, n: usize) -> Vec<Vec<f64>> {
        self.model.sample_points(n, 16)
    }

    pub fn domain(&self) -> Option<&Arc<ChartDomain>> {
        self.model.domain()
    }

    /// Coordinates of `v ∈ E_p` modulo `W` in the quotient frame.
    pub fn quotient_coords(&self, v: &DVector<f64>, p: &[f64]) -> Result<[f64; 2]> {
        let basis = [
            self.quotient_frame[0].eval(p)?,
            self.quotient_frame[1].eval(p)?,
            self.w.eval(p)?,
        ];
        let c = decompose(v, &basis).ok_or(EngelError::FrameDegenerate { t: f64::NAN })?;
        Ok([c[0], c[1]])
    }

    /// The line `D/W` at `p` in quotient-frame coordinates (unit length).
    pub fn d_mod_w(&self, p: &[f64]) -> Result<[f64; 2]> {
        let mut best = [0.0, 0.0];
        let mut best_norm = -1.0;
        for s in &self.d_span {
            let c = self.quotient_coords(&s.eval(p)?, p)?;
            let n = c[0].hypot(c[1]);
            if n > best_norm {
                best_norm = n;
                best = c;
            }
        }
        if best_norm <= 1e-12 {
            return Err(EngelError::FrameDegenerate { t: f64::NAN });
        }
        Ok([best[0] / best_norm, best[1] / best_norm])
    }
}

/// Per-point verification outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub point: Vec<f64>,
    pub rank_d: usize,
    pub rank_e: usize,
    pub rank_ee: usize,
    /// The declared `E` sections span the derived distribution `D + [D,D]`.
    pub e_consistent: bool,
    /// Angle between the computed Cauchy line and the declared `W`.
    pub cauchy_angle_error: Option<f64>,
    /// Angle between the declared `W` and the plane `D`.
    pub w_in_d_angle: Option<f64>,
    pub marginal: bool,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank_tol: f64,
    pub fd_step: f64,
    pub cauchy_angle_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub pass: bool,
    pub n_points: usize,
    pub n_failed: usize,
    /// Indices of points whose spectrum sits within a decade of the rank tolerance.
    pub marginal_points: Vec<usize>,
    pub max_cauchy_angle_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub structure: String,
    pub provenance: Provenance,
    pub tolerances: Tolerances,
    pub points: Vec<PointRecord>,
    pub summary: VerificationSummary,
}

/// Check ranks `(2,3,4)` and the Cauchy line at `n_samples` Halton points.
pub fn verify_engel(s: &EngelStructure, n_samples: usize, tol: f64) -> Result<VerificationReport> {
    verify_engel_with(s, n_samples, &NumericConfig { rank_tol: tol, ..NumericConfig::default() })
}

pub fn verify_engel_with(s: &EngelStructure, n_samples: usize, cfg: &NumericConfig) -> Result<VerificationReport> {
    if n_samples == 0 {
        return Err(EngelError::InvalidParameter("n_samples must be at least 1".into()));
    }
    let points = s.sample_points(n_samples);
    let records: Vec<PointRecord> = points.par_iter().map(|p| verify_point(s, p, cfg)).collect();
    let marginal_points = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.marginal)
        .map(|(i, _)| i)
        .collect();
    let n_failed = records.iter().filter(|r| !r.passed).count();
    let max_cauchy_angle_error = records
        .iter()
        .filter_map(|r| r.cauchy_angle_error)
        .fold(0.0, f64::max);
    Ok(VerificationReport {
        structure: s.name.clone(),
        provenance: s.provenance.clone(),
        tolerances: Tolerances {
            rank_tol: cfg.rank_tol,
            fd_step: cfg.fd_step,
            cauchy_angle_tol: CAUCHY_ANGLE_TOL,
        },
        summary: VerificationSummary {
            pass: n_failed == 0,
            n_points: records.len(),
            n_failed,
            marginal_points,
            max_cauchy_angle_error,
        },
        points: records,
    })
}

fn verify_point(s: &EngelStructure, p: &[f64], cfg: &NumericConfig) -> PointRecord {
    let mut rec = PointRecord {
        point: p.to_vec(),
        rank_d: 0,
        rank_e: 0,
        rank_ee: 0,
        e_consistent: false,
        cauchy_angle_error: None,
        w_in_d_angle: None,
        marginal: false,
        passed: false,
        error: None,
    };
    if let Err(e) = fill_point(s, p, cfg, &mut rec) {
        rec.error = Some(e.to_string());
        rec.passed = false;
    }
    rec
}

fn fill_point(s: &EngelStructure, p: &[f64], cfg: &NumericConfig, rec: &mut PointRecord) -> Result<()> {
    let d: Vec<DVector<f64>> = s.d_span.iter().map(|x| x.eval(p)).collect::<Result<_>>()?;
    let rd = distribution_rank_report(&d, cfg.rank_tol)?;
    let derived = span_with_brackets(&s.model, &s.d_span, p, cfg)?;
    let re = distribution_rank_report(&derived, cfg.rank_tol)?;
    let ee = span_with_brackets(&s.model, &s.e_span, p, cfg)?;
    let ree = distribution_rank_report(&ee, cfg.rank_tol)?;
    let e_vecs: Vec<DVector<f64>> = s.e_span.iter().map(|x| x.eval(p)).collect::<Result<_>>()?;
    let mut joint = e_vecs.clone();
    joint.extend(derived.iter().cloned());
    let rj = distribution_rank_report(&joint, cfg.rank_tol)?;
    let re_decl = distribution_rank_report(&e_vecs, cfg.rank_tol)?;

    rec.rank_d = rd.rank;
    rec.rank_e = re.rank;
    rec.rank_ee = ree.rank;
    rec.e_consistent = rj.rank == re.rank && re_decl.rank == re.rank;
    rec.marginal = rd.marginal || re.marginal || ree.marginal;

    let ranks_ok = rec.rank_d == 2 && rec.rank_e == 3 && rec.rank_ee == 4 && rec.e_consistent;
    if ranks_ok {
        let w_decl = s.w.eval(p)?;
        let w = cauchy_characteristic_with(s, p, cfg)?;
        rec.cauchy_angle_error = Some(line_angle(&w, &w_decl));
        rec.w_in_d_angle = Some(angle_to_span(&w_decl, &d));
    }
    rec.passed = ranks_ok
        && rec.cauchy_angle_error.is_some_and(|a| a < CAUCHY_ANGLE_TOL)
        && rec.w_in_d_angle.is_some_and(|a| a < CAUCHY_ANGLE_TOL);
    Ok(())
}

/// Skew pairing `B_ij` on `E` read along the transverse section.
pub fn skew_pairing(
    model: &FrameModel,
    e_span: &[Section],
    transverse: &Section,
    p: &[f64],
    cfg: &NumericConfig,
) -> Result<DMatrix<f64>> {
    if e_span.len() != 3 {
        return Err(EngelError::DimensionMismatch {
            expected: 3,
            got: e_span.len(),
        });
    }
    let mut basis: Vec<DVector<f64>> = e_span.iter().map(|x| x.eval(p)).collect::<Result<_>>()?;
    basis.push(transverse.eval(p)?);
    let mut b = DMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in i + 1..3 {
            let br = model.bracket(&e_span[i], &e_span[j], p, cfg)?;
            let c = decompose(&br, &basis).ok_or(EngelError::DegenerateKernel { point: p.to_vec() })?;
            b[(i, j)] = c[3];
            b[(j, i)] = -c[3];
        }
    }
    Ok(b)
}

/// Unit kernel direction of the skew pairing on `E` at `p`, given any three
/// sections spanning `E` and a transverse section.
pub fn cauchy_line(
    model: &FrameModel,
    e_span: &[Section],
    transverse: &Section,
    p: &[f64],
    cfg: &NumericConfig,
) -> Result<DVector<f64>> {
    let b = skew_pairing(model, e_span, transverse, p, cfg)?;
    let k = [b[(1, 2)], -b[(0, 2)], b[(0, 1)]];
    let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    if kn <= cfg.rank_tol {
        return Err(EngelError::DegenerateKernel { point: p.to_vec() });
    }
    let mut w = DVector::zeros(model.dim());
    for (i, s) in e_span.iter().enumerate() {
        w += s.eval(p)? * k[i];
    }
    let n = w.norm();
    if n <= cfg.rank_tol {
        return Err(EngelError::DegenerateKernel { point: p.to_vec() });
    }
    Ok(w / n)
}

/// Cauchy characteristic at `p`, oriented to agree with the declared `W`.
pub fn cauchy_characteristic(s: &EngelStructure, p: &[f64], tol: f64) -> Result<DVector<f64>> {
    let cfg = NumericConfig { rank_tol: tol, ..NumericConfig::default() };
    cauchy_characteristic_with(s, p, &cfg)
}

pub fn cauchy_characteristic_with(s: &EngelStructure, p: &[f64], cfg: &NumericConfig) -> Result<DVector<f64>> {
    let w = cauchy_line(&s.model, &s.e_span, &s.transverse, p, cfg)?;
    let decl = s.w.eval(p)?;
    Ok(if w.dot(&decl) < 0.0 { -w } else { w })
}

/// `X = ∂x + z∂y + w∂z` on the standard chart.
pub(crate) fn darboux_x(dom: &Arc<ChartDomain>) -> ChartVectorField {
    ChartVectorField::new(dom, |p| DVector::from_vec(vec![1.0, p[2], p[3], 0.0])).with_jacobian(|_| {
        let mut j = DMatrix::zeros(4, 4);
        j[(1, 2)] = 1.0;
        j[(2, 3)] = 1.0;
        j
    })
}

/// The standard structure `D = ⟨∂w, ∂x + z∂y + w∂z⟩` on `[-2,2]⁴`.
pub fn darboux_standard() -> EngelStructure {
    let dom = ChartDomain::cube(&["x", "y", "z", "w"], -2.0, 2.0);
    let x = darboux_x(&dom);
    let dw = ChartVectorField::coordinate(&dom, 3);
    let dz = ChartVectorField::coordinate(&dom, 2);
    let dy = ChartVectorField::coordinate(&dom, 1);
    EngelStructure {
        name: "darboux".into(),
        model: FrameModel::coordinate_chart(&dom),
        d_span: vec![Section::Chart(dw.clone()), Section::Chart(x.clone())],
        e_span: vec![Section::Chart(dw.clone()), Section::Chart(x.clone()), Section::Chart(dz.clone())],
        w: Section::Chart(dw),
        transverse: Section::Chart(dy),
        quotient_frame: [Section::Chart(x), Section::Chart(dz)],
        provenance: Provenance::Darboux,
        flow_period: None,
    }
}

/// Chart `(x,y,z,θ)` with a circle fiber of the given period.
pub(crate) fn long_chart(period: f64) -> Arc<ChartDomain> {
    let box_ = Coord::Interval { lo: -2.0, hi: 2.0 };
    ChartDomain::new(
        &["x", "y", "z", "theta"],
        vec![box_, box_, box_, Coord::Periodic { period }],
        vec![(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0), (0.0, period)],
    )
}

/// Rotating-plane structure `D = ⟨∂θ, cosθ·ℓ₁ + sinθ·ℓ₂⟩` for chart fields
/// `ℓ₁ = ∂x + z∂y`, `ℓ₂ = ∂z` on a chart with fiber coordinate `θ`.
pub(crate) fn rotating_legendrian(dom: &Arc<ChartDomain>) -> (ChartVectorField, ChartVectorField, ChartVectorField) {
    let l1 = ChartVectorField::new(dom, |p| DVector::from_vec(vec![1.0, p[2], 0.0, 0.0])).with_jacobian(|_| {
        let mut j = DMatrix::zeros(4, 4);
        j[(1, 2)] = 1.0;
        j
    });
    let l2 = ChartVectorField::coordinate(dom, 2);
    let rot = ChartVectorField::new(dom, |p| {
        let (s, c) = p[3].sin_cos();
        DVector::from_vec(vec![c, c * p[2], s, 0.0])
    })
    .with_jacobian(|p| {
        let (s, c) = p[3].sin_cos();
        let mut j = DMatrix::zeros(4, 4);
        j[(0, 3)] = -s;
        j[(1, 2)] = c;
        j[(1, 3)] = -s * p[2];
        j[(2, 3)] = c;
        j
    });
    (l1, l2, rot)
}

/// The long chart `ker(dy − z dx) ∩ ker(cosθ dz − sinθ dx)` on `[-2,2]³ × S¹`.
pub fn darboux_long() -> EngelStructure {
    long_structure("long-darboux", 2.0 * PI, Provenance::LongDarboux)
}

pub(crate) fn long_structure(name: &str, period: f64, provenance: Provenance) -> EngelStructure {
    let dom = long_chart(period);
    let (l1, l2, rot) = rotating_legendrian(&dom);
    let dth = ChartVectorField::coordinate(&dom, 3);
    let dy = ChartVectorField::coordinate(&dom, 1);
    EngelStructure {
        name: name.into(),
        model: FrameModel::coordinate_chart(&dom),
        d_span: vec![Section::Chart(dth.clone()), Section::Chart(rot)],
        e_span: vec![Section::Chart(dth.clone()), Section::Chart(l1.clone()), Section::Chart(l2.clone())],
        w: Section::Chart(dth),
        transverse: Section::Chart(dy),
        quotient_frame: [Section::Chart(l1), Section::Chart(l2)],
        provenance,
        flow_period: None,
    }
}

/// An integrable plane field `⟨∂x, ∂y⟩` declared with `E` equal to itself.
/// Used as a negative control: it must fail verification.
pub fn integrable_counterexample() -> EngelStructure {
    let dom = ChartDomain::cube(&["x", "y", "z", "w"], -2.0, 2.0);
    let dx = ChartVectorField::coordinate(&dom, 0);
    let dy = ChartVectorField::coordinate(&dom, 1);
    let dz = ChartVectorField::coordinate(&dom, 2);
    EngelStructure {
        name: "integrable-counterexample".into(),
        model: FrameModel::coordinate_chart(&dom),
        d_span: vec![Section::Chart(dx.clone()), Section::Chart(dy.clone())],
        e_span: vec![Section::Chart(dx.clone()), Section::Chart(dy.clone())],
        w: Section::Chart(dx),
        transverse: Section::Chart(dz.clone()),
        quotient_frame: [Section::Chart(dy), Section::Chart(dz)],
        provenance: Provenance::Counterexample,
        flow_period: None,
    }
}
