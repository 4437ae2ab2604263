//! Browser demo bindings.
//!
//! A [`DemoCase`] wraps one synthetic image with its saliency and
//! co-saliency maps. The page pulls RGBA buffers for the canvases,
//! toggles Otsu foreground overlays, and replays the solver's iteration
//! trace from the JSON returned by [`DemoCase::solve`].

use serde::Serialize;
use wasm_bindgen::prelude::*;

use coloc::geometry::iou;
use coloc::imagery::{binarize, otsu_threshold, GrayMap};
use coloc::prior::{absolute_prior, quality_score, QualityScores};
use coloc::solver::{colocalize_image, extract_reference_box, SolverConfig};
use coloc::synth::{synth_case, Rng64};
use coloc::BoundingBox;

#[derive(Serialize)]
struct IterationReply {
    iter: usize,
    solution: [u32; 4],
    anchored: [u32; 4],
    step_sq_norm: f64,
}

#[derive(Serialize)]
struct SolveReply {
    truth: [u32; 4],
    distractor: Option<[u32; 4]>,
    z_c: [u32; 4],
    z_s: [u32; 4],
    edge_rows: (u32, u32),
    edge_cols: (u32, u32),
    q_s: f64,
    q_c: f64,
    termination: String,
    iterations: Vec<IterationReply>,
    final_box: [u32; 4],
    final_iou: f64,
    error: Option<String>,
}

/// One generated case with everything the page needs to draw.
#[wasm_bindgen]
pub struct DemoCase {
    image: GrayMap,
    saliency: GrayMap,
    cosaliency: GrayMap,
    prior: Option<GrayMap>,
    truth: BoundingBox,
    distractor: Option<BoundingBox>,
}

fn gray_rgba(map: &GrayMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(map.values().len() * 4);
    for &v in map.values() {
        let g = (v * 255.0).round() as u8;
        out.extend_from_slice(&[g, g, g, 255]);
    }
    out
}

#[wasm_bindgen]
impl DemoCase {
    /// Generates a new case; the same `(size, seed, with_distractor)`
    /// always produces the same case.
    #[wasm_bindgen(constructor)]
    pub fn new(size: u32, seed: u32, with_distractor: bool) -> DemoCase {
        let mut rng = Rng64::new(u64::from(seed));
        let case = synth_case(&mut rng, size.max(32), with_distractor)
            .expect("size is clamped to the generator's minimum");
        let prior = QualityScores::new(
            quality_score(&case.saliency).unwrap_or(0.05),
            quality_score(&case.cosaliency).unwrap_or(0.05),
        )
        .ok()
        .and_then(|q| absolute_prior(&case.saliency, &case.cosaliency, &q).ok());
        DemoCase {
            image: case.image,
            saliency: case.saliency,
            cosaliency: case.cosaliency,
            prior,
            truth: case.truth,
            distractor: case.distractor,
        }
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    /// RGBA pixels of the requested layer: "image", "saliency",
    /// "cosaliency" or "prior".
    pub fn layer_rgba(&self, layer: &str) -> Vec<u8> {
        match layer {
            "saliency" => gray_rgba(&self.saliency),
            "cosaliency" => gray_rgba(&self.cosaliency),
            "prior" => gray_rgba(self.prior.as_ref().unwrap_or(&self.saliency)),
            _ => gray_rgba(&self.image),
        }
    }

    /// Amber-tinted Otsu foreground of a layer, transparent elsewhere,
    /// for compositing over the layer canvas.
    pub fn otsu_overlay_rgba(&self, layer: &str) -> Vec<u8> {
        let map = match layer {
            "saliency" => &self.saliency,
            "cosaliency" => &self.cosaliency,
            "prior" => self.prior.as_ref().unwrap_or(&self.saliency),
            _ => &self.image,
        };
        let mut out = vec![0u8; map.values().len() * 4];
        if let Ok(threshold) = otsu_threshold(map) {
            let mask = binarize(map, threshold);
            for (i, &bit) in mask.bits().iter().enumerate() {
                if bit {
                    out[i * 4..i * 4 + 4].copy_from_slice(&[255, 176, 32, 150]);
                }
            }
        }
        out
    }

    /// Runs the full iterative solve and returns the trace as JSON.
    pub fn solve(&self, epsilon: f64, max_iters: u32, edge_threshold: f64) -> String {
        let cfg = SolverConfig {
            epsilon,
            max_iters: max_iters.max(1) as usize,
            clamp_delta: None,
            edge_threshold,
        };
        serde_json::to_string(&self.solve_reply(&cfg)).expect("reply serializes")
    }

    fn box_components(bx: &BoundingBox) -> [u32; 4] {
        bx.components()
    }
}

impl DemoCase {
    fn solve_reply(&self, cfg: &SolverConfig) -> SolveReply {
        let edges = coloc::imagery::edge_profile(&self.image, cfg.edge_threshold);
        let z_c = extract_reference_box(&self.cosaliency).unwrap_or(self.truth);
        let z_s = extract_reference_box(&self.saliency).unwrap_or(self.truth);
        let q_s = quality_score(&self.saliency).unwrap_or(0.05);
        let q_c = quality_score(&self.cosaliency).unwrap_or(0.05);

        match colocalize_image(&self.saliency, &self.cosaliency, &self.image, cfg) {
            Ok((final_box, trace)) => SolveReply {
                truth: Self::box_components(&self.truth),
                distractor: self.distractor.as_ref().map(Self::box_components),
                z_c: Self::box_components(&z_c),
                z_s: Self::box_components(&z_s),
                edge_rows: edges.row_span(),
                edge_cols: edges.col_span(),
                q_s,
                q_c,
                termination: trace.termination.to_string(),
                iterations: trace
                    .records
                    .iter()
                    .map(|rec| IterationReply {
                        iter: rec.iter,
                        solution: Self::box_components(&rec.solution),
                        anchored: Self::box_components(&rec.anchored),
                        step_sq_norm: rec.step_sq_norm,
                    })
                    .collect(),
                final_box: Self::box_components(&final_box),
                final_iou: iou(&final_box, &self.truth),
                error: None,
            },
            Err(e) => SolveReply {
                truth: Self::box_components(&self.truth),
                distractor: self.distractor.as_ref().map(Self::box_components),
                z_c: Self::box_components(&z_c),
                z_s: Self::box_components(&z_s),
                edge_rows: edges.row_span(),
                edge_cols: edges.col_span(),
                q_s,
                q_c,
                termination: String::new(),
                iterations: Vec::new(),
                final_box: Self::box_components(&self.truth),
                final_iou: 0.0,
                error: Some(e.to_string()),
            },
        }
    }
}
