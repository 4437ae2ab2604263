//! Bounding boxes in inclusive pixel coordinates and their arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagery::BinaryMask;

/// Axis-aligned box `[t, b, l, r]` with inclusive integer coordinates.
///
/// `b > t` and `r > l` always hold, so the box covers at least 2x2 pixels.
/// Component order is `(t, b, l, r)` everywhere: files, reports, traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    t: u32,
    b: u32,
    l: u32,
    r: u32,
}

impl BoundingBox {
    pub fn new(t: u32, b: u32, l: u32, r: u32) -> Result<Self> {
        if b <= t {
            return Err(Error::InvalidBox {
                t,
                b,
                l,
                r,
                reason: "b must exceed t",
            });
        }
        if r <= l {
            return Err(Error::InvalidBox {
                t,
                b,
                l,
                r,
                reason: "r must exceed l",
            });
        }
        Ok(Self { t, b, l, r })
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Pixel count, inclusive on both axes.
    pub fn area(&self) -> u64 {
        u64::from(self.b - self.t + 1) * u64::from(self.r - self.l + 1)
    }

    pub fn contains_pixel(&self, row: u32, col: u32) -> bool {
        (self.t..=self.b).contains(&row) && (self.l..=self.r).contains(&col)
    }

    pub fn contains_box(&self, other: &BoundingBox) -> bool {
        self.t <= other.t && self.b >= other.b && self.l <= other.l && self.r >= other.r
    }

    pub fn validate_within(&self, width: u32, height: u32) -> Result<()> {
        if self.b >= height || self.r >= width {
            return Err(Error::BoxOutOfBounds {
                t: self.t,
                b: self.b,
                l: self.l,
                r: self.r,
                width,
                height,
            });
        }
        Ok(())
    }

    pub fn to_vector(&self) -> BoxVector {
        BoxVector {
            t: f64::from(self.t),
            b: f64::from(self.b),
            l: f64::from(self.l),
            r: f64::from(self.r),
        }
    }

    /// Components in the canonical `(t, b, l, r)` order.
    pub fn components(&self) -> [u32; 4] {
        [self.t, self.b, self.l, self.r]
    }
}

/// Continuous relaxation of a box used inside the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxVector {
    pub t: f64,
    pub b: f64,
    pub l: f64,
    pub r: f64,
}

impl BoxVector {
    pub fn components(&self) -> [f64; 4] {
        [self.t, self.b, self.l, self.r]
    }
}

/// Squared L2 distance between two integer boxes, the solver's step norm.
pub fn step_sq_norm(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.components()
        .iter()
        .zip(b.components())
        .map(|(&x, y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

/// Minimal box containing every true pixel.
///
/// A mask spanning a single row (or column) is expanded by one pixel so the
/// `b > t` / `r > l` invariants hold, shifting inward at the image border.
pub fn tight_box(mask: &BinaryMask) -> Result<BoundingBox> {
    let mut bounds: Option<(u32, u32, u32, u32)> = None;
    for row in 0..mask.height() {
        for col in 0..mask.width() {
            if !mask.get(row, col) {
                continue;
            }
            bounds = Some(match bounds {
                None => (row, row, col, col),
                Some((t, b, l, r)) => (t.min(row), b.max(row), l.min(col), r.max(col)),
            });
        }
    }
    let (t, b, l, r) = bounds.ok_or(Error::EmptyMask)?;
    box_from_extremes(t, b, l, r, mask.width(), mask.height())
}

/// Builds a box from pixel extremes, expanding a degenerate single-row or
/// single-column span by one pixel (shifting inward at the border).
///
/// Needs at least a 2x2 frame; a thinner one cannot hold a legal box.
pub fn box_from_extremes(
    t: u32,
    b: u32,
    l: u32,
    r: u32,
    width: u32,
    height: u32,
) -> Result<BoundingBox> {
    if width < 2 || height < 2 {
        return Err(Error::MinimumSizeViolated { width, height });
    }
    let (t, b) = expand_degenerate(t, b, height);
    let (l, r) = expand_degenerate(l, r, width);
    BoundingBox::new(t, b, l, r)
}

fn expand_degenerate(lo: u32, hi: u32, extent: u32) -> (u32, u32) {
    if hi > lo {
        (lo, hi)
    } else if hi + 1 < extent {
        (lo, hi + 1)
    } else {
        (lo - 1, hi)
    }
}

/// Intersection-over-union on inclusive pixel areas.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter_rows = (a.b.min(b.b) as i64 - a.t.max(b.t) as i64 + 1).max(0) as u64;
    let inter_cols = (a.r.min(b.r) as i64 - a.l.max(b.l) as i64 + 1).max(0) as u64;
    let inter = inter_rows * inter_cols;
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Tight box enclosing every box in the list.
pub fn union_box(boxes: &[BoundingBox]) -> Result<BoundingBox> {
    let first = boxes.first().ok_or(Error::EmptyList)?;
    let mut acc = *first;
    for bx in &boxes[1..] {
        acc.t = acc.t.min(bx.t);
        acc.b = acc.b.max(bx.b);
        acc.l = acc.l.min(bx.l);
        acc.r = acc.r.max(bx.r);
    }
    Ok(acc)
}

/// Rounds a continuous solution to the nearest legal integer box.
///
/// Components round to nearest, clamp into the image, then repair the
/// strict orderings (`b >= t + 1`, `r >= l + 1`), shifting the low
/// coordinate down when pinned at the border.
pub fn round_to_box(v: &BoxVector, width: u32, height: u32) -> BoundingBox {
    assert!(
        v.components().iter().all(|c| c.is_finite()),
        "round_to_box requires finite components"
    );
    let (t, b) = round_pair(v.t, v.b, height);
    let (l, r) = round_pair(v.l, v.r, width);
    BoundingBox { t, b, l, r }
}

fn round_pair(lo: f64, hi: f64, extent: u32) -> (u32, u32) {
    let clamp = |x: f64| -> u32 { x.round().clamp(0.0, f64::from(extent - 1)) as u32 };
    let mut lo = clamp(lo);
    let mut hi = clamp(hi);
    if hi <= lo {
        if lo + 1 < extent {
            hi = lo + 1;
        } else {
            lo = extent - 2;
            hi = extent - 1;
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(t: u32, b: u32, l: u32, r: u32) -> BoundingBox {
        BoundingBox::new(t, b, l, r).unwrap()
    }

    #[test]
    fn new_enforces_strict_order() {
        assert!(BoundingBox::new(3, 3, 0, 5).is_err());
        assert!(BoundingBox::new(0, 5, 4, 4).is_err());
        assert!(BoundingBox::new(0, 5, 4, 3).is_err());
    }

    #[test]
    fn tight_box_spans_extremes() {
        let mut mask = BinaryMask::new_empty(10, 10);
        mask.set(2, 3, true);
        mask.set(5, 7, true);
        assert_eq!(tight_box(&mask).unwrap(), bb(2, 5, 3, 7));
    }

    #[test]
    fn tight_box_full_mask() {
        let mut mask = BinaryMask::new_empty(10, 10);
        for row in 0..10 {
            for col in 0..10 {
                mask.set(row, col, true);
            }
        }
        assert_eq!(tight_box(&mask).unwrap(), bb(0, 9, 0, 9));
    }

    #[test]
    fn tight_box_expands_single_pixel() {
        let mut mask = BinaryMask::new_empty(10, 10);
        mask.set(4, 4, true);
        assert_eq!(tight_box(&mask).unwrap(), bb(4, 5, 4, 5));
    }

    #[test]
    fn tight_box_expands_at_border() {
        let mut mask = BinaryMask::new_empty(10, 10);
        mask.set(9, 9, true);
        assert_eq!(tight_box(&mask).unwrap(), bb(8, 9, 8, 9));
    }

    #[test]
    fn tight_box_empty_mask_errors() {
        let mask = BinaryMask::new_empty(4, 4);
        assert!(matches!(tight_box(&mask), Err(Error::EmptyMask)));
    }

    #[test]
    fn tight_box_rejects_sub_2x2_frames() {
        let mut thin = BinaryMask::new_empty(1, 6);
        thin.set(0, 0, true);
        assert!(matches!(tight_box(&thin), Err(Error::MinimumSizeViolated { .. })));
    }

    #[test]
    fn iou_identical_and_disjoint() {
        let a = bb(0, 9, 0, 9);
        assert_eq!(iou(&a, &a), 1.0);
        let far = bb(20, 29, 20, 29);
        assert_eq!(iou(&a, &far), 0.0);
    }

    #[test]
    fn iou_partial_overlap() {
        let a = bb(0, 9, 0, 9);
        let b = bb(5, 14, 5, 14);
        // 5x5 overlap, union 100 + 100 - 25
        assert!((iou(&a, &b) - 25.0 / 175.0).abs() < 1e-15);
    }

    #[test]
    fn union_box_cases() {
        let a = bb(0, 3, 0, 3);
        assert_eq!(union_box(&[a]).unwrap(), a);
        let b = bb(5, 8, 5, 8);
        assert_eq!(union_box(&[a, b]).unwrap(), bb(0, 8, 0, 8));
        let outer = bb(0, 9, 0, 9);
        let inner = bb(2, 4, 2, 4);
        assert_eq!(union_box(&[outer, inner]).unwrap(), outer);
        assert!(matches!(union_box(&[]), Err(Error::EmptyList)));
    }

    #[test]
    fn round_to_box_rounds_and_clamps() {
        let v = BoxVector {
            t: 2.4,
            b: 7.6,
            l: 1.0,
            r: 9.0,
        };
        assert_eq!(round_to_box(&v, 20, 20), bb(2, 8, 1, 9));

        let tight = BoxVector {
            t: 5.4,
            b: 5.6,
            l: 1.0,
            r: 3.0,
        };
        assert_eq!(round_to_box(&tight, 20, 20), bb(5, 6, 1, 3));

        let wild = BoxVector {
            t: -3.0,
            b: 50.0,
            l: -1.0,
            r: 25.0,
        };
        assert_eq!(round_to_box(&wild, 20, 20), bb(0, 19, 0, 19));
    }

    #[test]
    fn round_to_box_repairs_at_border() {
        let v = BoxVector {
            t: 19.2,
            b: 19.4,
            l: 0.1,
            r: 0.2,
        };
        let bx = round_to_box(&v, 20, 20);
        assert_eq!(bx, bb(18, 19, 0, 1));
    }
}
