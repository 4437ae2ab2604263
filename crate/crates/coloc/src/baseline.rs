//! Classical map generators so the pipeline can run end to end without
//! external detectors.
//!
//! These are smoke-test stand-ins, not benchmark contenders: a
//! spectral-residual saliency detector and a histogram-commonness
//! co-saliency fusion. Runs driven by them are tagged with their map
//! provenance so results are never conflated with externally supplied maps.

use crate::error::{Error, Result};
use crate::imagery::GrayMap;

/// Working scale of the spectral-residual transform.
const WORKING_SIZE: u32 = 64;
/// Guard inside the log-amplitude so zero spectral bins stay finite.
const LOG_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    fn add(self, other: Complex) -> Complex {
        Complex::new(self.re + other.re, self.im + other.im)
    }

    fn sub(self, other: Complex) -> Complex {
        Complex::new(self.re - other.re, self.im - other.im)
    }

    fn mul(self, other: Complex) -> Complex {
        Complex::new(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )
    }

    fn magnitude(self) -> f64 {
        self.re.hypot(self.im)
    }

    fn phase(self) -> f64 {
        self.im.atan2(self.re)
    }
}

/// In-place radix-2 FFT; `data.len()` must be a power of two.
fn fft_inplace(data: &mut [Complex], inverse: bool) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());

    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let angle = sign * 2.0 * std::f64::consts::PI / len as f64;
        let w_len = Complex::new(angle.cos(), angle.sin());
        for chunk in data.chunks_mut(len) {
            let mut w = Complex::new(1.0, 0.0);
            let half = len / 2;
            for k in 0..half {
                let u = chunk[k];
                let v = chunk[k + half].mul(w);
                chunk[k] = u.add(v);
                chunk[k + half] = u.sub(v);
                w = w.mul(w_len);
            }
        }
        len <<= 1;
    }

    if inverse {
        let scale = 1.0 / n as f64;
        for value in data.iter_mut() {
            value.re *= scale;
            value.im *= scale;
        }
    }
}

/// 2-D FFT over a square power-of-two grid, rows then columns.
fn fft2d(data: &mut [Complex], side: usize, inverse: bool) {
    debug_assert_eq!(data.len(), side * side);
    for row in data.chunks_mut(side) {
        fft_inplace(row, inverse);
    }
    let mut column = vec![Complex::ZERO; side];
    for c in 0..side {
        for r in 0..side {
            column[r] = data[r * side + c];
        }
        fft_inplace(&mut column, inverse);
        for r in 0..side {
            data[r * side + c] = column[r];
        }
    }
}

/// Bilinear resampling with pixel-center alignment.
fn resample_bilinear(values: &[f64], in_w: u32, in_h: u32, out_w: u32, out_h: u32) -> Vec<f64> {
    let scale_x = f64::from(in_w) / f64::from(out_w);
    let scale_y = f64::from(in_h) / f64::from(out_h);
    let at = |r: usize, c: usize| values[r * in_w as usize + c];
    let mut out = Vec::with_capacity(out_w as usize * out_h as usize);
    for r in 0..out_h {
        let sy = ((f64::from(r) + 0.5) * scale_y - 0.5).clamp(0.0, f64::from(in_h - 1));
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(in_h as usize - 1);
        let fy = sy - y0 as f64;
        for c in 0..out_w {
            let sx = ((f64::from(c) + 0.5) * scale_x - 0.5).clamp(0.0, f64::from(in_w - 1));
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(in_w as usize - 1);
            let fx = sx - x0 as f64;
            let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
            let bottom = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

fn box_filter_3x3(values: &[f64], w: usize, h: usize) -> Vec<f64> {
    let sample = |r: i64, c: i64| -> f64 {
        let r = r.clamp(0, h as i64 - 1) as usize;
        let c = c.clamp(0, w as i64 - 1) as usize;
        values[r * w + c]
    };
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let mut sum = 0.0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    sum += sample(r + dr, c + dc);
                }
            }
            out.push(sum / 9.0);
        }
    }
    out
}

fn gaussian_blur(values: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for i in -radius..=radius {
        kernel.push((-(i * i) as f64 / (2.0 * sigma * sigma)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in kernel.iter_mut() {
        *k /= norm;
    }

    let mut horizontal = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w as i64 {
            let mut sum = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let cc = (c + ki as i64 - radius).clamp(0, w as i64 - 1) as usize;
                sum += k * values[r * w + cc];
            }
            horizontal[r * w + c as usize] = sum;
        }
    }
    let mut out = vec![0.0; w * h];
    for r in 0..h as i64 {
        for c in 0..w {
            let mut sum = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let rr = (r + ki as i64 - radius).clamp(0, h as i64 - 1) as usize;
                sum += k * horizontal[rr * w + c];
            }
            out[r as usize * w + c] = sum;
        }
    }
    out
}

fn min_max_normalize(values: &mut [f64]) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range <= LOG_EPS {
        values.iter_mut().for_each(|v| *v = 0.0);
    } else {
        values.iter_mut().for_each(|v| *v = (*v - lo) / range);
    }
}

/// Spectral-residual saliency.
///
/// The image is resampled to a 64x64 working grid; the saliency spectrum
/// keeps each frequency's phase and replaces its log-amplitude with the
/// residual against a 3x3 local average. The squared inverse transform is
/// Gaussian-smoothed (sigma 2.5), resampled back to the input size and
/// min-max normalized. A zero-range input (no spectral residual exists)
/// yields the all-zero map.
pub fn spectral_residual_saliency(image: &GrayMap) -> GrayMap {
    let (w, h) = (image.width(), image.height());
    let (lo, hi) = image.min_max();
    if hi - lo <= LOG_EPS {
        return GrayMap::from_fn(w, h, |_, _| 0.0).expect("dims come from a valid map");
    }

    let side = WORKING_SIZE as usize;
    let working = resample_bilinear(image.values(), w, h, WORKING_SIZE, WORKING_SIZE);
    let mut spectrum: Vec<Complex> = working.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2d(&mut spectrum, side, false);

    // ln(0) = -inf would make exp(residual) vanish; bins with negligible
    // amplitude carry no phase and must stay zero, so floor the log only
    // for the neighborhood average and zero those bins outright
    let amplitudes: Vec<f64> = spectrum.iter().map(|c| c.magnitude()).collect();
    let peak = amplitudes.iter().cloned().fold(0.0f64, f64::max);
    let tiny = peak * LOG_EPS;
    let log_amp: Vec<f64> = amplitudes.iter().map(|&a| a.max(tiny).ln()).collect();
    let smoothed = box_filter_3x3(&log_amp, side, side);
    for (i, value) in spectrum.iter_mut().enumerate() {
        if amplitudes[i] <= tiny {
            *value = Complex::ZERO;
            continue;
        }
        let residual = log_amp[i] - smoothed[i];
        let phase = value.phase();
        let magnitude = residual.exp();
        *value = Complex::new(magnitude * phase.cos(), magnitude * phase.sin());
    }
    fft2d(&mut spectrum, side, true);

    let energy: Vec<f64> = spectrum
        .iter()
        .map(|c| {
            let m = c.magnitude();
            m * m
        })
        .collect();
    let blurred = gaussian_blur(&energy, side, side, 2.5);
    let mut full = resample_bilinear(&blurred, WORKING_SIZE, WORKING_SIZE, w, h);
    min_max_normalize(&mut full);
    GrayMap::new(w, h, full).expect("normalized values lie in [0, 1]")
}

/// Normalized intensity histogram used as an appearance signature.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSignature {
    bins: Vec<f64>,
}

/// Bin count for grayscale signatures.
pub const GRAY_BINS: usize = 16;

impl HistogramSignature {
    pub fn new(bins: Vec<f64>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidParameter(
                "signature needs at least one bin".into(),
            ));
        }
        if bins.iter().any(|&b| !b.is_finite() || b < 0.0) {
            return Err(Error::InvalidParameter(
                "signature bins must be nonnegative".into(),
            ));
        }
        let sum: f64 = bins.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "signature bins must sum to 1, got {sum}"
            )));
        }
        Ok(Self { bins })
    }

    /// 16-bin grayscale signature of a map.
    pub fn from_gray(map: &GrayMap) -> Self {
        let mut bins = vec![0.0; GRAY_BINS];
        for &v in map.values() {
            let bin = ((v * GRAY_BINS as f64) as usize).min(GRAY_BINS - 1);
            bins[bin] += 1.0;
        }
        let total = map.values().len() as f64;
        bins.iter_mut().for_each(|b| *b /= total);
        Self { bins }
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    /// Histogram intersection: `sum_i min(a_i, b_i)`, 1 for identical
    /// signatures.
    pub fn intersection(&self, other: &HistogramSignature) -> f64 {
        self.bins
            .iter()
            .zip(&other.bins)
            .map(|(&a, &b)| a.min(b))
            .sum()
    }
}

/// Mean pairwise histogram intersection of each image against the rest.
pub fn commonness_weights(signatures: &[HistogramSignature]) -> Result<Vec<f64>> {
    let n = signatures.len();
    if n < 2 {
        return Err(Error::TooFewImages(n));
    }
    Ok((0..n)
        .map(|i| {
            let total: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| signatures[i].intersection(&signatures[j]))
                .sum();
            total / (n - 1) as f64
        })
        .collect())
}

/// Weights each saliency map by its image's commonness within the group,
/// then min-max normalizes per map.
pub fn fuse_cosaliency(
    maps: &[GrayMap],
    signatures: &[HistogramSignature],
) -> Result<Vec<GrayMap>> {
    if maps.len() != signatures.len() {
        return Err(Error::InvalidParameter(format!(
            "{} maps but {} signatures",
            maps.len(),
            signatures.len()
        )));
    }
    let weights = commonness_weights(signatures)?;
    maps.iter()
        .zip(&weights)
        .map(|(map, &w)| {
            let mut values: Vec<f64> = map.values().iter().map(|&v| v * w).collect();
            min_max_normalize(&mut values);
            GrayMap::new(map.width(), map.height(), values)
        })
        .collect()
}
