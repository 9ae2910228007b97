use serde::{Deserialize, Serialize};

/// Coordinates closer to zero than this count as zero for `A_W`.
pub const AW_TOL: f64 = 1e-12;

/// Pieces of the accessible set from the origin in the Darboux chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessRegion {
    APlus,
    AMinus,
    AW,
    Outside,
}

/// Region of `p = (x, y, z, w)`; `x` only matters for `A_W`.
pub fn accessible_membership(p: &[f64; 4]) -> AccessRegion {
    let [x, y, z, w] = *p;
    if x.abs() <= AW_TOL && y.abs() <= AW_TOL && z.abs() <= AW_TOL {
        AccessRegion::AW
    } else if w > 0.0 && y > z * z / (2.0 * w) {
        AccessRegion::APlus
    } else if w < 0.0 && y < z * z / (2.0 * w) {
        AccessRegion::AMinus
    } else {
        AccessRegion::Outside
    }
}

/// `z² − 2yw`, negative strictly inside the cone bounding `A_±`.
pub fn boundary_cone_value(p: &[f64; 4]) -> f64 {
    p[2] * p[2] - 2.0 * p[1] * p[3]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_examples() {
        assert_eq!(accessible_membership(&[0.0, 1.0, 0.0, 1.0]), AccessRegion::APlus);
        assert_eq!(accessible_membership(&[5.0, 1.0, 0.0, 1.0]), AccessRegion::APlus);
        for t in [-3.0, 0.0, 2.0] {
            assert_eq!(accessible_membership(&[0.0, 0.0, 0.0, t]), AccessRegion::AW);
        }
        assert_eq!(accessible_membership(&[0.0, -1.0, 0.0, -1.0]), AccessRegion::AMinus);
        assert_eq!(accessible_membership(&[0.0, -1.0, 0.0, 1.0]), AccessRegion::Outside);
        assert_eq!(boundary_cone_value(&[7.0, 0.0, 0.0, 0.0]), 0.0);
        assert_eq!(boundary_cone_value(&[7.0, 1.0, 0.0, 1.0]), -2.0);
    }
}
