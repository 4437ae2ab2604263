//! The fused object prior and the anchored box.
//!
//! The prior map keeps each pixel's saliency value unless the co-saliency
//! map strongly disagrees upward — saliency below its Otsu threshold while
//! co-saliency is above its own — in which case the pixel takes the
//! quality-weighted average of the two maps. The anchored box then wraps
//! only those foreground regions of the prior that touch the current
//! mediator box, so a spurious salient region elsewhere in the image cannot
//! dislodge the solution on its own.

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::imagery::{binarize, connected_components, otsu_threshold, GrayMap};

/// Floor applied to the foreground/background contrast so quality weights
/// stay strictly positive.
pub const QUALITY_FLOOR: f64 = 0.05;

/// Strictly positive quality weights for the saliency and co-saliency maps.
///
/// Only the ratio `q_s : q_c` matters downstream; the weighted average in
/// [`absolute_prior`] is invariant to scaling both by the same factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityScores {
    q_s: f64,
    q_c: f64,
}

impl QualityScores {
    pub fn new(q_s: f64, q_c: f64) -> Result<Self> {
        for (name, q) in [("q_s", q_s), ("q_c", q_c)] {
            if !q.is_finite() || q <= 0.0 || q > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1], got {q}"
                )));
            }
        }
        Ok(Self { q_s, q_c })
    }

    pub fn q_s(&self) -> f64 {
        self.q_s
    }

    pub fn q_c(&self) -> f64 {
        self.q_c
    }
}

/// Map quality as foreground/background mean contrast under the map's own
/// Otsu split, floored at [`QUALITY_FLOOR`].
pub fn quality_score(map: &GrayMap) -> Result<f64> {
    let threshold = otsu_threshold(map)?;
    let mut fg_sum = 0.0;
    let mut fg_n = 0u64;
    let mut bg_sum = 0.0;
    let mut bg_n = 0u64;
    for &v in map.values() {
        if v > threshold {
            fg_sum += v;
            fg_n += 1;
        } else {
            bg_sum += v;
            bg_n += 1;
        }
    }
    debug_assert!(
        fg_n > 0 && bg_n > 0,
        "Otsu split leaves both classes populated"
    );
    let contrast = fg_sum / fg_n as f64 - bg_sum / bg_n as f64;
    Ok(contrast.max(QUALITY_FLOOR))
}

/// Fuses saliency and co-saliency into the absolute object prior.
///
/// Per pixel: the quality-weighted average of the two maps when
/// `S(p) < phi(S)` and `C(p) > phi(C)`, otherwise `S(p)` unchanged.
///
/// The weighted branch uses weights normalized once up front, so scaling
/// both quality scores by a common factor leaves the output bit-identical
/// whenever the normalized pair is unchanged.
pub fn absolute_prior(s: &GrayMap, c: &GrayMap, q: &QualityScores) -> Result<GrayMap> {
    if !s.same_dims(c) {
        return Err(Error::DimensionMismatch(
            s.width(),
            s.height(),
            c.width(),
            c.height(),
        ));
    }
    let phi_s = otsu_threshold(s)?;
    let phi_c = otsu_threshold(c)?;
    let total = q.q_s + q.q_c;
    let w_s = q.q_s / total;
    let w_c = q.q_c / total;

    let values = s
        .values()
        .iter()
        .zip(c.values())
        .map(|(&sv, &cv)| {
            if sv < phi_s && cv > phi_c {
                (w_s * sv + w_c * cv).clamp(0.0, 1.0)
            } else {
                sv
            }
        })
        .collect();
    GrayMap::new(s.width(), s.height(), values)
}

/// Tight box around the prior's foreground regions that overlap the
/// mediator box `b_o`.
///
/// Overlapping 8-connected components are kept whole, not clipped. When no
/// component touches `b_o`, the mediator box itself is returned; a
/// degenerate prior propagates `DegenerateMap` and the caller falls back to
/// `b_o` as well.
pub fn anchored_box(prior: &GrayMap, b_o: &BoundingBox) -> Result<BoundingBox> {
    let threshold = otsu_threshold(prior)?;
    let mask = binarize(prior, threshold);
    let mut kept: Option<(u32, u32, u32, u32)> = None;
    for component in connected_components(&mask) {
        if !component
            .iter()
            .any(|&(row, col)| b_o.contains_pixel(row, col))
        {
            continue;
        }
        for (row, col) in component {
            kept = Some(match kept {
                None => (row, row, col, col),
                Some((t, b, l, r)) => (t.min(row), b.max(row), l.min(col), r.max(col)),
            });
        }
    }
    match kept {
        None => Ok(*b_o),
        Some((t, b, l, r)) => {
            crate::geometry::box_from_extremes(t, b, l, r, mask.width(), mask.height())
        }
    }
}
