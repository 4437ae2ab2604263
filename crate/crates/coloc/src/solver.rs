//! The per-image quadratic program and the iterative co-localization loop.
//!
//! Each iteration minimizes the collective cost of deviating from three
//! reference boxes — co-saliency, saliency, and the previous solution
//! (the mediator) — subject to the edge-profile box constraints:
//!
//! ```text
//! min  sum_k (z - z_k)' M_k (z - z_k)        k in {c, s, o}
//! s.t. b > t,  min(E1) <= t,  b <= max(E1),
//!      r > l,  min(E2) <= l,  r <= max(E2)
//! ```
//!
//! Every `M_k` is diagonal, so the program splits into two independent
//! 2-variable convex QPs (vertical and horizontal) that are solved exactly
//! by enumerating the faces of the feasible region.

use serde::{Deserialize, Serialize};

use crate::costs::{default_clamp_delta, rejection_cost, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::{round_to_box, step_sq_norm, tight_box, BoundingBox, BoxVector};
use crate::imagery::{binarize, edge_profile, otsu_threshold, EdgeProfile, GrayMap};
use crate::prior::{absolute_prior, anchored_box, quality_score, QualityScores};

/// The three reference boxes pulling on the solution.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceSet {
    /// Co-saliency reference (weak supervision).
    pub z_c: BoundingBox,
    /// Saliency reference (self-awareness).
    pub z_s: BoundingBox,
    /// Mediator: the previous iteration's solution, initially `z_c`.
    pub z_o: BoundingBox,
}

/// Rejection costs keyed by reference.
#[derive(Debug, Clone, Copy)]
pub struct RejectionCosts {
    pub c: CostMatrix,
    pub s: CostMatrix,
    pub o: CostMatrix,
}

/// Loop configuration. The defaults are the method's published constants:
/// squared-step tolerance 2 and a forced break after 30 iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Convergence tolerance on the squared L2 step between consecutive
    /// integer solutions.
    pub epsilon: f64,
    /// Iteration cap; the loop breaks forcibly when it is reached.
    pub max_iters: usize,
    /// Lower clamp for deviation ratios; `None` selects
    /// `1 / (2 * max(width, height))` per image.
    pub clamp_delta: Option<f64>,
    /// Normalized Sobel magnitude cutoff for the edge profile.
    pub edge_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 2.0,
            max_iters: 30,
            clamp_delta: None,
            edge_threshold: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        if let Some(delta) = self.clamp_delta {
            if !(0.0..1.0).contains(&delta) || delta == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "clamp_delta must lie in (0, 1), got {delta}"
                )));
            }
        }
        if !self.edge_threshold.is_finite() || self.edge_threshold < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "edge_threshold must be nonnegative, got {}",
                self.edge_threshold
            )));
        }
        Ok(())
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Squared step between consecutive solutions fell below epsilon.
    Converged,
    /// Iteration cap reached; the latest solution is returned.
    ForcedBreak,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::ForcedBreak => write!(f, "forced_break"),
        }
    }
}

/// One iteration of the loop, for tracing and debugging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iter: usize,
    /// The rounded solution of this iteration.
    pub solution: BoundingBox,
    /// Anchored box the costs were computed against.
    pub anchored: BoundingBox,
    /// Diagonals of the three rejection-cost matrices.
    pub cost_c: [f64; 4],
    pub cost_s: [f64; 4],
    pub cost_o: [f64; 4],
    /// Squared step norm against the previous solution.
    pub step_sq_norm: f64,
}

/// Full record of a co-localization run on one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_record(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("trace holds at least one record")
    }
}

/// Objective value of Eq-style collective deviation costs at `z`.
pub fn objective(z: &BoxVector, refs: &ReferenceSet, costs: &RejectionCosts) -> f64 {
    let zc = z.components();
    let mut total = 0.0;
    for (reference, cost) in [
        (&refs.z_c, &costs.c),
        (&refs.z_s, &costs.s),
        (&refs.z_o, &costs.o),
    ] {
        let rc = reference.to_vector().components();
        let diag = cost.diagonal();
        for i in 0..4 {
            let d = zc[i] - rc[i];
            total += diag[i] * d * d;
        }
    }
    total
}

/// Solves the constrained QP exactly over the reals.
///
/// With diagonal costs the objective separates per coordinate and couples
/// only through `b >= t + 1` (and `r >= l + 1`), leaving two convex
/// 2-variable problems. Each is solved by evaluating the unconstrained
/// stationary point and the optima of the three constraint faces, keeping
/// the best feasible candidate. A coordinate whose total weight is zero is
/// held at the mediator's value, the designated tie-breaker on a flat
/// objective.
pub fn solve_qp(
    refs: &ReferenceSet,
    costs: &RejectionCosts,
    edges: &EdgeProfile,
) -> Result<BoxVector> {
    let (row_lo, row_hi) = edges.row_span();
    let (col_lo, col_hi) = edges.col_span();
    if row_hi < row_lo + 1 || col_hi < col_lo + 1 {
        return Err(Error::InfeasibleConstraints);
    }

    let weights = |i: usize| -> [f64; 3] {
        [
            costs.c.diagonal()[i],
            costs.s.diagonal()[i],
            costs.o.diagonal()[i],
        ]
    };
    let refs_at = |i: usize| -> [f64; 3] {
        [
            f64::from(refs.z_c.components()[i]),
            f64::from(refs.z_s.components()[i]),
            f64::from(refs.z_o.components()[i]),
        ]
    };

    let (t, b) = solve_pair(
        weights(0),
        refs_at(0),
        weights(1),
        refs_at(1),
        f64::from(row_lo),
        f64::from(row_hi),
        f64::from(refs.z_o.t()),
        f64::from(refs.z_o.b()),
    );
    let (l, r) = solve_pair(
        weights(2),
        refs_at(2),
        weights(3),
        refs_at(3),
        f64::from(col_lo),
        f64::from(col_hi),
        f64::from(refs.z_o.l()),
        f64::from(refs.z_o.r()),
    );
    Ok(BoxVector { t, b, l, r })
}

/// Minimizes `sum_k wx[k] (x - rx[k])^2 + sum_k wy[k] (y - ry[k])^2`
/// subject to `x >= lo`, `y <= hi`, `y >= x + 1`.
#[allow(clippy::too_many_arguments)]
fn solve_pair(
    wx: [f64; 3],
    rx: [f64; 3],
    wy: [f64; 3],
    ry: [f64; 3],
    lo: f64,
    hi: f64,
    default_x: f64,
    default_y: f64,
) -> (f64, f64) {
    let half = |w: &[f64; 3], r: &[f64; 3], v: f64| -> f64 {
        w.iter()
            .zip(r)
            .map(|(&wi, &ri)| wi * (v - ri) * (v - ri))
            .sum()
    };
    let stationary = |w: &[f64; 3], r: &[f64; 3], default: f64| -> f64 {
        let sw: f64 = w.iter().sum();
        if sw == 0.0 {
            default
        } else {
            (w[0] * r[0] + w[1] * r[1] + w[2] * r[2]) / sw
        }
    };

    let xs = stationary(&wx, &rx, default_x);
    let ys = stationary(&wy, &ry, default_y);

    let mut best: Option<(f64, f64, f64)> = None;
    let mut consider = |x: f64, y: f64| {
        if x >= lo && y <= hi && y - x >= 1.0 {
            let obj = half(&wx, &rx, x) + half(&wy, &ry, y);
            if best.is_none_or(|(_, _, b)| obj < b) {
                best = Some((x, y, obj));
            }
        }
    };

    // interior stationary point
    consider(xs, ys);
    // face x = lo
    consider(lo, ys.clamp(lo + 1.0, hi));
    // face y = hi
    consider(xs.clamp(lo, hi - 1.0), hi);
    // face y = x + 1: a 1-D parabola in x over [lo, hi - 1]. Feasible by
    // construction, and deliberately not run through `consider`: x + 1.0
    // can round below the true x+1 when it crosses a binade, making the
    // y - x >= 1 test reject the best face by one ulp.
    let swx: f64 = wx.iter().sum();
    let swy: f64 = wy.iter().sum();
    let diag_x = if swx + swy == 0.0 {
        default_x
    } else {
        let num: f64 = wx.iter().zip(&rx).map(|(&w, &r)| w * r).sum::<f64>()
            + wy.iter()
                .zip(&ry)
                .map(|(&w, &r)| w * (r - 1.0))
                .sum::<f64>();
        num / (swx + swy)
    };
    let diag_x = diag_x.clamp(lo, hi - 1.0);
    let diag_obj = half(&wx, &rx, diag_x) + half(&wy, &ry, diag_x + 1.0);
    if best.is_none_or(|(_, _, b)| diag_obj < b) {
        best = Some((diag_x, diag_x + 1.0, diag_obj));
    }

    let (x, y, _) = best.expect("face x = lo is always feasible when hi >= lo + 1");
    (x, y)
}

/// Reference box of a map: Otsu-binarize and take the tight box of the
/// foreground's extreme pixels.
pub fn extract_reference_box(map: &GrayMap) -> Result<BoundingBox> {
    let threshold = otsu_threshold(map)?;
    tight_box(&binarize(map, threshold))
}

/// Runs the full iterative loop on one image.
///
/// References come from the two maps, the mediator starts at the
/// co-saliency box, and the quality scores and fused prior are computed
/// once. Every iteration recomputes the anchored box against the current
/// mediator, rebuilds the three rejection-cost matrices, solves the QP,
/// and rounds; the loop converges when the squared step between
/// consecutive integer solutions drops below `cfg.epsilon`.
///
/// If exactly one of the two maps is degenerate, the other map's reference
/// box is returned with a single-entry trace; if both are, the run fails.
pub fn colocalize_image(
    s: &GrayMap,
    c: &GrayMap,
    image: &GrayMap,
    cfg: &SolverConfig,
) -> Result<(BoundingBox, IterationTrace)> {
    cfg.validate()?;
    for map in [s, c] {
        if !map.same_dims(image) {
            return Err(Error::DimensionMismatch(
                map.width(),
                map.height(),
                image.width(),
                image.height(),
            ));
        }
    }

    let z_s = match extract_reference_box(s) {
        Ok(b) => Some(b),
        Err(Error::DegenerateMap) => None,
        Err(e) => return Err(e),
    };
    let z_c = match extract_reference_box(c) {
        Ok(b) => Some(b),
        Err(Error::DegenerateMap) => None,
        Err(e) => return Err(e),
    };

    let (z_s, z_c) = match (z_s, z_c) {
        (Some(zs), Some(zc)) => (zs, zc),
        (Some(zs), None) => return Ok(single_iteration_result(zs)),
        (None, Some(zc)) => return Ok(single_iteration_result(zc)),
        (None, None) => return Err(Error::BothMapsDegenerate),
    };

    let q = QualityScores::new(quality_score(s)?, quality_score(c)?)?;
    let prior = absolute_prior(s, c, &q)?;
    let edges = edge_profile(image, cfg.edge_threshold);
    let (width, height) = (image.width(), image.height());
    let delta = cfg
        .clamp_delta
        .unwrap_or_else(|| default_clamp_delta(width, height));

    let mut z_o = z_c;
    let mut records = Vec::new();
    let mut termination = Termination::ForcedBreak;
    for iter in 1..=cfg.max_iters {
        let anchored = match anchored_box(&prior, &z_o) {
            Ok(b) => b,
            Err(Error::DegenerateMap) => z_o,
            Err(e) => return Err(e),
        };
        let costs = RejectionCosts {
            c: rejection_cost(&anchored, &z_c, width, height, delta)?,
            s: rejection_cost(&anchored, &z_s, width, height, delta)?,
            o: rejection_cost(&anchored, &z_o, width, height, delta)?,
        };
        let refs = ReferenceSet { z_c, z_s, z_o };
        let solution = round_to_box(&solve_qp(&refs, &costs, &edges)?, width, height);
        let step = step_sq_norm(&solution, &z_o);
        records.push(IterationRecord {
            iter,
            solution,
            anchored,
            cost_c: costs.c.diagonal(),
            cost_s: costs.s.diagonal(),
            cost_o: costs.o.diagonal(),
            step_sq_norm: step,
        });
        if step < cfg.epsilon {
            termination = Termination::Converged;
            break;
        }
        z_o = solution;
    }

    let trace = IterationTrace {
        records,
        termination,
    };
    Ok((trace.final_record().solution, trace))
}

fn single_iteration_result(fallback: BoundingBox) -> (BoundingBox, IterationTrace) {
    let trace = IterationTrace {
        records: vec![IterationRecord {
            iter: 1,
            solution: fallback,
            anchored: fallback,
            cost_c: [0.0; 4],
            cost_s: [0.0; 4],
            cost_o: [0.0; 4],
            step_sq_norm: 0.0,
        }],
        termination: Termination::Converged,
    };
    (fallback, trace)
}

/// Maps for one image of a batch.
#[derive(Debug, Clone)]
pub struct CaseMaps {
    pub image: GrayMap,
    pub saliency: GrayMap,
    pub cosaliency: GrayMap,
}

/// Runs [`colocalize_image`] over a batch, preserving input order.
///
/// Per-case failures are recorded in their slot and never abort the batch.
/// Every case is independent, so callers may distribute the work across
/// threads as long as results are reassembled in input order.
pub fn colocalize_set(
    cases: &[CaseMaps],
    cfg: &SolverConfig,
) -> Vec<Result<(BoundingBox, IterationTrace)>> {
    cases
        .iter()
        .map(|case| colocalize_image(&case.saliency, &case.cosaliency, &case.image, cfg))
        .collect()
}
