//! Rejection-cost matrices: how expensive it is for the solution to deviate
//! from each reference box, per coordinate.
//!
//! The spatial deviation matrix holds normalized per-coordinate distances
//! between the anchored box and a reference box on its diagonal and ones
//! elsewhere. The rejection cost is `-J * log(rho)` elementwise, where `J`
//! is the Jaccard similarity of the two boxes, so off-diagonals vanish and
//! references that overlap the anchor strongly become expensive to leave.

use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};

/// Diagonal 4x4 rejection-cost matrix in `(t, b, l, r)` order.
///
/// Off-diagonal entries are exactly zero by construction; the diagonal is
/// nonnegative and finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostMatrix {
    diag: [f64; 4],
}

impl CostMatrix {
    pub fn from_diagonal(diag: [f64; 4]) -> Result<Self> {
        if diag.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cost diagonal must be nonnegative and finite, got {diag:?}"
            )));
        }
        Ok(Self { diag })
    }

    pub fn zero() -> Self {
        Self { diag: [0.0; 4] }
    }

    pub fn diagonal(&self) -> [f64; 4] {
        self.diag
    }

    /// Materializes the full 4x4 matrix.
    pub fn as_matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (i, &d) in self.diag.iter().enumerate() {
            m[i][i] = d;
        }
        m
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_diagonal(self.diag.map(|d| d * factor))
    }
}

/// Normalized per-coordinate deviation between two boxes.
///
/// Diagonal: `|t_a - t_k| / height`, `|b_a - b_k| / height`,
/// `|l_a - l_k| / width`, `|r_a - r_k| / width`; every off-diagonal is 1.
pub fn deviation_matrix(
    anchor: &BoundingBox,
    reference: &BoundingBox,
    width: u32,
    height: u32,
) -> [[f64; 4]; 4] {
    let ratios = deviation_ratios(anchor, reference, width, height);
    let mut m = [[1.0; 4]; 4];
    for (i, &rho) in ratios.iter().enumerate() {
        m[i][i] = rho;
    }
    m
}

fn deviation_ratios(
    anchor: &BoundingBox,
    reference: &BoundingBox,
    width: u32,
    height: u32,
) -> [f64; 4] {
    let a = anchor.components();
    let k = reference.components();
    let diff = |i: usize| f64::from(a[i].abs_diff(k[i]));
    [
        diff(0) / f64::from(height),
        diff(1) / f64::from(height),
        diff(2) / f64::from(width),
        diff(3) / f64::from(width),
    ]
}

/// Default lower clamp for the deviation ratios: half a pixel of
/// normalized deviation, `1 / (2 * max(width, height))`.
pub fn default_clamp_delta(width: u32, height: u32) -> f64 {
    1.0 / (2.0 * f64::from(width.max(height)))
}

/// The cost formula itself: `-j * ln(clamp(rho, delta, 1))` per coordinate.
///
/// The natural logarithm is used; any other base rescales all matrices by
/// the same factor and leaves the solver's minimizer unchanged. Ratios are
/// clamped below by `delta` so an exact coordinate match pins strongly but
/// finitely.
pub fn rejection_from_similarity(j: f64, ratios: [f64; 4], delta: f64) -> Result<CostMatrix> {
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "clamp delta must lie in (0, 1), got {delta}"
        )));
    }
    if !(0.0..=1.0).contains(&j) {
        return Err(Error::InvalidParameter(format!(
            "jaccard score must lie in [0, 1], got {j}"
        )));
    }
    let diag = ratios.map(|rho| -j * rho.clamp(delta, 1.0).ln());
    CostMatrix::from_diagonal(diag)
}

/// Rejection cost of deviating from `reference`, weighted by its Jaccard
/// overlap with the anchored box.
pub fn rejection_cost(
    anchor: &BoundingBox,
    reference: &BoundingBox,
    width: u32,
    height: u32,
    delta: f64,
) -> Result<CostMatrix> {
    rejection_from_similarity(
        iou(anchor, reference),
        deviation_ratios(anchor, reference, width, height),
        delta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(t: u32, b: u32, l: u32, r: u32) -> BoundingBox {
        BoundingBox::new(t, b, l, r).unwrap()
    }

    #[test]
    fn deviation_matrix_identical_boxes() {
        let a = bb(10, 20, 10, 20);
        let m = deviation_matrix(&a, &a, 100, 100);
        for (i, row) in m.iter().enumerate() {
            for (j, &entry) in row.iter().enumerate() {
                assert_eq!(entry, if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn deviation_matrix_half_height_shift() {
        let a = bb(0, 10, 0, 10);
        let k = bb(50, 60, 0, 10);
        let m = deviation_matrix(&a, &k, 100, 100);
        assert_eq!(m[0][0], 0.5);
        assert_eq!(m[1][1], 0.5);
        assert_eq!(m[2][2], 0.0);
        assert_eq!(m[3][3], 0.0);
    }

    #[test]
    fn deviation_matrix_maximal_shift() {
        let a = bb(0, 1, 0, 10);
        let k = bb(99, 100, 0, 10);
        // not valid against a 100-row image on purpose: the ratio formula
        // only depends on coordinates and dimensions
        let m = deviation_matrix(&a, &k, 100, 100);
        assert!((m[0][0] - 0.99).abs() < 1e-15);
    }

    #[test]
    fn rejection_cost_zero_overlap_is_zero_matrix() {
        let a = bb(0, 9, 0, 9);
        let k = bb(50, 59, 50, 59);
        let m = rejection_cost(&a, &k, 100, 100, 0.005).unwrap();
        assert_eq!(m.diagonal(), [0.0; 4]);
    }

    #[test]
    fn rejection_cost_full_overlap_exact_match() {
        // a box against itself: J = 1 and every ratio 0, clamped to delta
        let a = bb(0, 49, 0, 49);
        let delta = default_clamp_delta(100, 100);
        assert!((delta - 1.0 / 200.0).abs() < 1e-18);
        let m = rejection_cost(&a, &a, 100, 100, delta).unwrap();
        for d in m.diagonal() {
            assert!(
                (d - 200.0f64.ln()).abs() < 1e-12,
                "expected ln 200, got {d}"
            );
        }
    }

    #[test]
    fn rejection_formula_half_ratio() {
        let m = rejection_from_similarity(1.0, [0.5, 0.0, 0.0, 0.0], 0.005).unwrap();
        assert!((m.diagonal()[0] - 2.0f64.ln()).abs() < 1e-12);
        // ratio 0 clamps to delta
        assert!((m.diagonal()[1] - -(0.005f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn rejection_cost_rejects_bad_delta() {
        let a = bb(0, 9, 0, 9);
        assert!(rejection_cost(&a, &a, 100, 100, 0.0).is_err());
        assert!(rejection_cost(&a, &a, 100, 100, 1.0).is_err());
    }

    #[test]
    fn cost_matrix_rejects_negative_diagonal() {
        assert!(CostMatrix::from_diagonal([0.0, -1.0, 0.0, 0.0]).is_err());
        assert!(CostMatrix::from_diagonal([f64::INFINITY, 0.0, 0.0, 0.0]).is_err());
    }
}
