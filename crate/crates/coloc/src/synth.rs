//! Seeded synthetic fixtures: one bright rectangle per image plus noisy
//! saliency/co-saliency maps, with an optional distractor blob in the
//! saliency map to exercise the mediator's anti-dislodging behavior.
//!
//! All randomness flows from one explicit generator state, so the same
//! seed always reproduces the same bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::imagery::GrayMap;

/// Noise level added to saliency maps.
pub const SALIENCY_NOISE: f64 = 0.1;
/// Noise level added to co-saliency maps.
pub const COSALIENCY_NOISE: f64 = 0.05;
/// Fraction of images that carry a distractor blob in their saliency map.
pub const DISTRACTOR_FRACTION: f64 = 0.3;

const BACKGROUND: f64 = 0.25;
const FOREGROUND: f64 = 0.85;
const MARGIN: u32 = 3;

/// Minimal deterministic generator (splitmix64), independent of any
/// platform entropy so fixtures are byte-stable across runs and targets.
#[derive(Debug, Clone)]
pub struct Rng64 {
    state: u64,
}

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_u32(&mut self, lo: u32, hi: u32) -> u32 {
        debug_assert!(lo <= hi);
        let span = u64::from(hi - lo) + 1;
        lo + (self.next_f64() * span as f64) as u32
    }

    /// Zero-mean Gaussian sample via Box-Muller (two uniforms per sample).
    pub fn normal(&mut self, sigma: f64) -> f64 {
        let u1 = (1.0 - self.next_f64()).max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// One generated case.
#[derive(Debug, Clone)]
pub struct SynthCase {
    pub image: GrayMap,
    pub saliency: GrayMap,
    pub cosaliency: GrayMap,
    pub truth: BoundingBox,
    /// Bounding box of the distractor blob, when one was placed.
    pub distractor: Option<BoundingBox>,
}

/// Deterministic distractor schedule: indices 0,1,2 of every block of 10
/// carry one, giving exactly 30% when the class size is a multiple of 10.
pub fn distractor_scheduled(index: usize) -> bool {
    index % 10 < 3
}

/// Generates one case: a clean rectangle image, a saliency map with noise
/// (and optionally a distractor disc), and a co-saliency map with lighter
/// noise.
pub fn synth_case(rng: &mut Rng64, size: u32, with_distractor: bool) -> Result<SynthCase> {
    if size < 32 {
        return Err(Error::InvalidParameter(format!(
            "size must be at least 32, got {size}"
        )));
    }

    let rect_h = rng.range_u32(size / 4, size / 2);
    let rect_w = rng.range_u32(size / 4, size / 2);
    let t = rng.range_u32(MARGIN, size - MARGIN - rect_h);
    let l = rng.range_u32(MARGIN, size - MARGIN - rect_w);
    let truth = BoundingBox::new(t, t + rect_h - 1, l, l + rect_w - 1)?;

    let distractor = if with_distractor {
        place_distractor(rng, size, &truth)
    } else {
        None
    };

    let image = GrayMap::from_fn(size, size, |r, c| {
        if truth.contains_pixel(r, c) {
            FOREGROUND
        } else {
            BACKGROUND
        }
    })?;

    let disc_center_radius = distractor.map(|d| {
        let cr = (d.t() + d.b()) / 2;
        let cc = (d.l() + d.r()) / 2;
        let rad = (d.b() - d.t()) / 2;
        (cr, cc, rad)
    });
    let saliency = noisy_mask(rng, size, SALIENCY_NOISE, |r, c| {
        if truth.contains_pixel(r, c) {
            return true;
        }
        disc_center_radius.is_some_and(|(cr, cc, rad)| {
            let dr = i64::from(r) - i64::from(cr);
            let dc = i64::from(c) - i64::from(cc);
            dr * dr + dc * dc <= i64::from(rad) * i64::from(rad)
        })
    })?;
    let cosaliency = noisy_mask(rng, size, COSALIENCY_NOISE, |r, c| {
        truth.contains_pixel(r, c)
    })?;

    Ok(SynthCase {
        image,
        saliency,
        cosaliency,
        truth,
        distractor,
    })
}

fn place_distractor(rng: &mut Rng64, size: u32, truth: &BoundingBox) -> Option<BoundingBox> {
    // keep the blob clearly separated from the object so "excludes the
    // distractor" is well defined
    let gap = 4u32;
    for _ in 0..64 {
        let rad = rng.range_u32(size / 20, size / 12).max(2);
        let cr = rng.range_u32(MARGIN + rad, size - 1 - MARGIN - rad);
        let cc = rng.range_u32(MARGIN + rad, size - 1 - MARGIN - rad);
        let blob = BoundingBox::new(cr - rad, cr + rad, cc - rad, cc + rad).ok()?;
        let separated = blob.b() + gap < truth.t()
            || truth.b() + gap < blob.t()
            || blob.r() + gap < truth.l()
            || truth.r() + gap < blob.l();
        if separated {
            return Some(blob);
        }
    }
    None
}

fn noisy_mask(
    rng: &mut Rng64,
    size: u32,
    sigma: f64,
    inside: impl Fn(u32, u32) -> bool,
) -> Result<GrayMap> {
    let mut values = Vec::with_capacity(size as usize * size as usize);
    for r in 0..size {
        for c in 0..size {
            let base = if inside(r, c) { 1.0 } else { 0.0 };
            values.push((base + rng.normal(sigma)).clamp(0.0, 1.0));
        }
    }
    GrayMap::new(size, size, values)
}

/// Per-case entry of a dataset manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ManifestCase {
    pub class: String,
    pub stem: String,
    pub distractor: bool,
}

/// Records where the maps of a dataset came from, plus the distractor
/// schedule for synthetic data.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DatasetManifest {
    /// "synthetic", "baseline", or a user-supplied tag.
    pub provenance: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<u32>,
    pub cases: Vec<ManifestCase>,
}

/// File name of the manifest inside a dataset root.
pub const MANIFEST_FILE: &str = "manifest.json";

impl DatasetManifest {
    pub fn save(&self, root: &std::path::Path) -> Result<()> {
        let path = root.join(MANIFEST_FILE);
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        std::fs::write(&path, body).map_err(|source| Error::WriteFailure { path, source })
    }

    pub fn load(root: &std::path::Path) -> Result<Option<Self>> {
        let path = root.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let body = std::fs::read_to_string(&path)?;
        serde_json::from_str(&body)
            .map(Some)
            .map_err(|e| Error::InvalidParameter(format!("bad manifest {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_reproduces_case() {
        let a = synth_case(&mut Rng64::new(7), 64, true).unwrap();
        let b = synth_case(&mut Rng64::new(7), 64, true).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.distractor, b.distractor);
        assert_eq!(a.image, b.image);
        assert_eq!(a.saliency, b.saliency);
        assert_eq!(a.cosaliency, b.cosaliency);
    }

    #[test]
    fn truth_box_respects_invariants() {
        let mut rng = Rng64::new(11);
        for _ in 0..50 {
            let case = synth_case(&mut rng, 48, false).unwrap();
            assert!(case.truth.validate_within(48, 48).is_ok());
            assert!(case.truth.b() > case.truth.t());
            assert!(case.truth.r() > case.truth.l());
        }
    }

    #[test]
    fn distractor_is_disjoint_from_truth() {
        let mut rng = Rng64::new(3);
        let mut placed = 0;
        for _ in 0..30 {
            let case = synth_case(&mut rng, 128, true).unwrap();
            if let Some(blob) = case.distractor {
                placed += 1;
                assert_eq!(crate::geometry::iou(&blob, &case.truth), 0.0);
            }
        }
        assert!(
            placed > 25,
            "distractor placement should almost always succeed"
        );
    }

    #[test]
    fn schedule_is_thirty_percent() {
        let count = (0..20).filter(|&i| distractor_scheduled(i)).count();
        assert_eq!(count, 6);
    }

    #[test]
    fn rejects_tiny_sizes() {
        assert!(synth_case(&mut Rng64::new(1), 16, false).is_err());
    }
}
