use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{EngelError, Result};
use crate::frame::{ChartDomain, ChartVectorField, FrameModel, Section};
use crate::frame::{distribution_rank, span_with_brackets};
use crate::numeric::NumericConfig;

/// A contact 3-manifold chart: the plane field `ξ`, a transverse section and
/// (optionally) a Legendrian frame trivializing `ξ`.
#[derive(Clone, Debug)]
pub struct ContactModel {
    pub name: String,
    pub domain: Arc<ChartDomain>,
    pub xi: [ChartVectorField; 2],
    pub reeb: ChartVectorField,
    pub legendrian: Option<[ChartVectorField; 2]>,
}

impl ContactModel {
    /// `(ℝ³, ker(dy − z dx))` on `[-2,2]³` with Legendrian frame `(∂x + z∂y, ∂z)`.
    pub fn standard_r3() -> Self {
        let dom = ChartDomain::cube(&["x", "y", "z"], -2.0, 2.0);
        let l1 = ChartVectorField::new(&dom, |p| DVector::from_vec(vec![1.0, p[2], 0.0])).with_jacobian(|_| {
            let mut j = DMatrix::zeros(3, 3);
            j[(1, 2)] = 1.0;
            j
        });
        let l2 = ChartVectorField::coordinate(&dom, 2);
        Self {
            name: "r3".into(),
            domain: dom.clone(),
            xi: [l1.clone(), l2.clone()],
            reeb: ChartVectorField::coordinate(&dom, 1),
            legendrian: Some([l1, l2]),
        }
    }

    /// Maximal non-integrability `rank(ξ + [ξ,ξ]) = 3` at `n` sample points.
    pub fn check_contact(&self, n: usize, cfg: &NumericConfig) -> Result<()> {
        let model = FrameModel::coordinate_chart(&self.domain);
        let span = [Section::Chart(self.xi[0].clone()), Section::Chart(self.xi[1].clone())];
        for p in self.domain.sample(n, 5) {
            let v = span_with_brackets(&model, &span, &p, cfg)?;
            if distribution_rank(&v, cfg.rank_tol)? != 3 {
                return Err(EngelError::NotContact { point: p });
            }
        }
        Ok(())
    }
}
