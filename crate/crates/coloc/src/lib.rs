//! Object co-localization from per-image saliency and group co-saliency maps.
//!
//! Given a saliency map (what stands out in one image) and a co-saliency map
//! (what the image group has in common), each image is localized by
//! iteratively solving a small constrained quadratic program over the box
//! vector `[t, b, l, r]`. Three reference boxes pull on the solution: the
//! saliency box, the co-saliency box, and the previous iteration's solution
//! acting as an adaptive mediator between them. Deviation from each
//! reference is priced by a diagonal rejection-cost matrix derived from a
//! fused object prior, and the loop stops once consecutive solutions differ
//! by a squared step norm below a small tolerance.
//!
//! The crate is organized along the pipeline:
//!
//! - [`imagery`] — rasters, Otsu thresholding, components, edge profiles
//! - [`geometry`] — boxes, IoU, rounding
//! - [`prior`] — quality scores, the fused object prior, anchored boxes
//! - [`costs`] — spatial deviation ratios and rejection-cost matrices
//! - [`solver`] — the per-image QP and the iterative loop
//! - [`baseline`] — classical map generators for running without external
//!   detectors
//! - [`synth`] — seeded synthetic fixtures
//! - [`harness`] — dataset layout, CorLoc evaluation, reports, overlays

pub mod baseline;
pub mod costs;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod imagery;
pub mod prior;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use geometry::{BoundingBox, BoxVector};
pub use imagery::{BinaryMask, EdgeProfile, GrayMap};
pub use solver::{SolverConfig, Termination};
