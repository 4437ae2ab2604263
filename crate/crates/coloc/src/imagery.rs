//! Grayscale rasters and the low-level map operations: loading, Otsu
//! thresholding, binarization, connected components and edge profiles.
//!
//! Every map in the pipeline (input image, saliency, co-saliency, fused
//! prior) is a [`GrayMap`]: row-major `f64` intensities in `[0, 1]`.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Normalized grayscale raster.
///
/// Invariants: `values.len() == width * height`, every value lies in
/// `[0, 1]`, and both dimensions are at least 2 so a legal bounding box
/// (`b > t`, `r > l`) is representable.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl GrayMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension);
        }
        if width < 2 || height < 2 {
            return Err(Error::MinimumSizeViolated { width, height });
        }
        let expected = width as usize * height as usize;
        if values.len() != expected {
            return Err(Error::ValueCountMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::IntensityOutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    /// Builds a map by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(width as usize * height as usize);
        for row in 0..height {
            for col in 0..width {
                values.push(f(row, col));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> f64 {
        debug_assert!(row < self.height && col < self.width);
        self.values[row as usize * self.width as usize + col as usize]
    }

    pub fn same_dims(&self, other: &GrayMap) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// 8-bit quantization `round(v * 255)` used by the histogram and the
    /// raster writers.
    pub fn quantized(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|&v| (v * 255.0).round() as u8)
            .collect()
    }
}

/// Boolean raster sharing the dimensions of its source `GrayMap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new_empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> bool {
        self.bits[row as usize * self.width as usize + col as usize]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: bool) {
        self.bits[row as usize * self.width as usize + col as usize] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_true(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }
}

/// Row and column index sets of the image's edge pixels.
///
/// Only the extremes gate the solver, but the full sorted sets are kept for
/// inspection. `min < max` holds on both axes so the box constraints stay
/// feasible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeProfile {
    rows: Vec<u32>,
    cols: Vec<u32>,
}

impl EdgeProfile {
    pub fn new(mut rows: Vec<u32>, mut cols: Vec<u32>) -> Result<Self> {
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        if rows.len() < 2 || cols.len() < 2 {
            return Err(Error::InfeasibleConstraints);
        }
        Ok(Self { rows, cols })
    }

    /// Profile covering the whole image, the fallback when no usable edges
    /// are found.
    pub fn full_extent(width: u32, height: u32) -> Self {
        Self {
            rows: (0..height).collect(),
            cols: (0..width).collect(),
        }
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    /// `(min, max)` over the edge rows.
    pub fn row_span(&self) -> (u32, u32) {
        (self.rows[0], *self.rows.last().unwrap())
    }

    /// `(min, max)` over the edge columns.
    pub fn col_span(&self) -> (u32, u32) {
        (self.cols[0], *self.cols.last().unwrap())
    }
}

/// Loads an 8-bit grayscale or RGB raster (PNG or PGM) as a normalized map.
///
/// RGB collapses to luma `0.299 R + 0.587 G + 0.114 B`; an alpha channel is
/// dropped. 8-bit sample `v` maps to `v / 255`.
pub fn load_gray_map(path: impl AsRef<Path>) -> Result<GrayMap> {
    let path = path.as_ref();
    let dynimg = image::ImageReader::open(path)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?
        .decode()
        .map_err(|e| Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;

    let (width, height) = (dynimg.width(), dynimg.height());
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension);
    }
    if width < 2 || height < 2 {
        return Err(Error::MinimumSizeViolated { width, height });
    }

    let values: Vec<f64> = match dynimg {
        image::DynamicImage::ImageLuma8(img) => {
            img.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect()
        }
        image::DynamicImage::ImageLumaA8(img) => {
            img.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect()
        }
        image::DynamicImage::ImageRgb8(img) => img
            .pixels()
            .map(|p| luma8(p.0[0], p.0[1], p.0[2]))
            .collect(),
        image::DynamicImage::ImageRgba8(img) => img
            .pixels()
            .map(|p| luma8(p.0[0], p.0[1], p.0[2]))
            .collect(),
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: format!("{:?} samples are not 8-bit", other.color()),
            })
        }
    };

    GrayMap::new(width, height, values)
}

fn luma8(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)) / 255.0
}

/// Writes a map as an 8-bit raster, picking the format from the extension
/// (`.pgm` for binary P5, `.png` for 8-bit grayscale PNG).
pub fn save_gray_map(map: &GrayMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = map.quantized();
    let wrap = |source| Error::WriteFailure {
        path: path.to_path_buf(),
        source,
    };
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => {
            let mut file = std::fs::File::create(path).map_err(wrap)?;
            write!(file, "P5\n{} {}\n255\n", map.width(), map.height()).map_err(wrap)?;
            file.write_all(&bytes).map_err(wrap)?;
            Ok(())
        }
        Some("png") => image::save_buffer(
            path,
            &bytes,
            map.width(),
            map.height(),
            image::ExtendedColorType::L8,
        )
        .map_err(|e| Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }),
        other => Err(Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: format!("unknown extension {:?}", other),
        }),
    }
}

/// Otsu's threshold over the 256-bin histogram of quantized intensities.
///
/// Returns the level `t*/255` whose split maximizes between-class variance;
/// the induced foreground is `{p : map(p) > t*}`. Ties take the lowest
/// level. The variance ordering is computed from exact integer sums so the
/// argmax is reproducible bit-for-bit.
pub fn otsu_threshold(map: &GrayMap) -> Result<f64> {
    let mut hist = [0u64; 256];
    for q in map.quantized() {
        hist[q as usize] += 1;
    }
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(q, &h)| q as u64 * h).sum();

    let mut best: Option<(usize, f64)> = None;
    let mut n0 = 0u64;
    let mut s0 = 0u64;
    for (level, &count) in hist.iter().enumerate() {
        n0 += count;
        s0 += level as u64 * count;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = total_sum - s0;
        // between-class variance up to the constant 1/N^2:
        // n0*n1*(mu0 - mu1)^2 = (s0*n1 - s1*n0)^2 / (n0*n1)
        let d = s0 as i128 * n1 as i128 - s1 as i128 * n0 as i128;
        let variance = (d * d) as f64 / (n0 as f64 * n1 as f64);
        if best.is_none_or(|(_, v)| variance > v) {
            best = Some((level, variance));
        }
    }

    match best {
        Some((level, _)) => Ok(level as f64 / 255.0),
        None => Err(Error::DegenerateMap),
    }
}

/// Strict-greater-than binarization: `bit(p) = map(p) > threshold`.
pub fn binarize(map: &GrayMap, threshold: f64) -> BinaryMask {
    BinaryMask {
        width: map.width(),
        height: map.height(),
        bits: map.values().iter().map(|&v| v > threshold).collect(),
    }
}

/// 8-connected components of the foreground, scan-ordered.
///
/// Each component lists its `(row, col)` pixels in BFS discovery order;
/// components appear in row-major order of their first-discovered pixel.
pub fn connected_components(mask: &BinaryMask) -> Vec<Vec<(u32, u32)>> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut seen = vec![false; (w * h) as usize];
    let mut components = Vec::new();
    let mut queue = std::collections::VecDeque::new();

    for row in 0..mask.height() {
        for col in 0..mask.width() {
            let idx = row as usize * mask.width() as usize + col as usize;
            if seen[idx] || !mask.get(row, col) {
                continue;
            }
            seen[idx] = true;
            queue.push_back((row, col));
            let mut pixels = Vec::new();
            while let Some((r, c)) = queue.pop_front() {
                pixels.push((r, c));
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                        if nr < 0 || nc < 0 || nr >= h || nc >= w {
                            continue;
                        }
                        let nidx = (nr * w + nc) as usize;
                        if !seen[nidx] && mask.get(nr as u32, nc as u32) {
                            seen[nidx] = true;
                            queue.push_back((nr as u32, nc as u32));
                        }
                    }
                }
            }
            components.push(pixels);
        }
    }
    components
}

/// Rows and columns touched by strong Sobel edges.
///
/// Gradient magnitudes use replicate padding and are normalized by their
/// maximum; pixels with normalized magnitude `>= edge_threshold` count as
/// edges. An empty or single-line edge set falls back to the full image
/// extent so the solver constraints stay feasible.
pub fn edge_profile(image: &GrayMap, edge_threshold: f64) -> EdgeProfile {
    let (w, h) = (image.width(), image.height());
    let magnitude = sobel_magnitude(image);
    let max = magnitude.iter().cloned().fold(0.0f64, f64::max);

    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut row_hit = vec![false; h as usize];
    let mut col_hit = vec![false; w as usize];
    for row in 0..h {
        for col in 0..w {
            let g = magnitude[row as usize * w as usize + col as usize];
            let normalized = if max > 0.0 { g / max } else { 0.0 };
            if normalized >= edge_threshold {
                row_hit[row as usize] = true;
                col_hit[col as usize] = true;
            }
        }
    }
    for (i, hit) in row_hit.iter().enumerate() {
        if *hit {
            rows.push(i as u32);
        }
    }
    for (i, hit) in col_hit.iter().enumerate() {
        if *hit {
            cols.push(i as u32);
        }
    }

    match EdgeProfile::new(rows, cols) {
        Ok(profile) => profile,
        Err(_) => EdgeProfile::full_extent(w, h),
    }
}

fn sobel_magnitude(image: &GrayMap) -> Vec<f64> {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let sample = |r: i64, c: i64| -> f64 {
        let r = r.clamp(0, h - 1) as u32;
        let c = c.clamp(0, w - 1) as u32;
        image.get(r, c)
    };
    let mut out = Vec::with_capacity((w * h) as usize);
    for r in 0..h {
        for c in 0..w {
            let gx = (sample(r - 1, c + 1) + 2.0 * sample(r, c + 1) + sample(r + 1, c + 1))
                - (sample(r - 1, c - 1) + 2.0 * sample(r, c - 1) + sample(r + 1, c - 1));
            let gy = (sample(r + 1, c - 1) + 2.0 * sample(r + 1, c) + sample(r + 1, c + 1))
                - (sample(r - 1, c - 1) + 2.0 * sample(r - 1, c) + sample(r - 1, c + 1));
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}
