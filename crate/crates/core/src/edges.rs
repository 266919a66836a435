//! Laplacian, Laplacian-of-Gaussian and fuzzy (Sobel membership) edge
//! detectors, and their union.
//!
//! All detectors run on a grayscale derived from the raster with the low
//! `mask_bits` of every channel cleared. Embedding only ever touches those
//! bits, so the map computed on a cover and on its stego image agree exactly.
//!
//! Every response is computed in integer arithmetic. The Gaussian weights are
//! quantized to 16-bit fixed point once, which makes the per-pixel path used
//! during extraction bit-identical to the full-map path.

use crate::error::{Error, Result};
use crate::imaging::ImageRaster;

/// Largest `|Gx| + |Gy|` a 3x3 Sobel pair can produce on 8-bit input.
pub const SOBEL_MAX: f64 = 2040.0;

const LOG_WEIGHT_ONE: i64 = 1 << 16;
const LOG_SCALE: f64 = (1u64 << 32) as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeParams {
    pub laplacian_threshold: f64,
    pub log_sigma: f64,
    pub log_threshold: f64,
    pub fuzzy_low: f64,
    pub fuzzy_high: f64,
    /// Low-order bits cleared before detection.
    pub mask_bits: u8,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            laplacian_threshold: 16.0,
            log_sigma: 1.0,
            log_threshold: 4.0,
            fuzzy_low: 0.0625,
            fuzzy_high: 0.25,
            mask_bits: 3,
        }
    }
}

impl EdgeParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.laplacian_threshold > 0.0 && self.log_threshold > 0.0) {
            return bad("edge thresholds must be > 0");
        }
        if !(self.log_sigma > 0.0 && self.log_sigma <= 8.0) {
            return bad("log_sigma must be in (0, 8]");
        }
        if !(self.fuzzy_low > 0.0 && self.fuzzy_low < self.fuzzy_high && self.fuzzy_high <= 1.0) {
            return bad("fuzzy bounds must satisfy 0 < low < high <= 1");
        }
        if self.mask_bits > 4 {
            return bad("mask_bits must be <= 4");
        }
        Ok(())
    }
}

/// 8-bit grayscale grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayGrid {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayGrid {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height, "gray grid size mismatch");
        Self { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Sample with replicated borders.
    #[inline]
    fn at(&self, x: isize, y: isize) -> i32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x] as i32
    }

    fn require_min(&self, min: usize) -> Result<()> {
        if self.width < min || self.height < min {
            return Err(Error::ImageTooSmall { width: self.width, height: self.height, min });
        }
        Ok(())
    }
}

/// Per-pixel edge flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl EdgeMap {
    fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut flags = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                flags.push(f(x, y));
            }
        }
        Self { width, height, flags }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.flags[y * self.width + x]
    }

    pub fn edge_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Fraction of pixels flagged as edges.
    pub fn density(&self) -> f64 {
        self.edge_count() as f64 / self.flags.len() as f64
    }

    pub fn union(&self, other: &EdgeMap) -> EdgeMap {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let flags = self.flags.iter().zip(&other.flags).map(|(a, b)| *a || *b).collect();
        EdgeMap { width: self.width, height: self.height, flags }
    }
}

#[inline]
fn masked_luma(rgb: [u8; 3], mask: u8) -> u8 {
    let [r, g, b] = rgb.map(|c| (c & mask) as u32);
    ((77 * r + 150 * g + 29 * b) >> 8) as u8
}

/// Grayscale of `raster` after clearing the low `mask_bits` of every channel.
pub fn masked_gray(raster: &ImageRaster, mask_bits: u8) -> GrayGrid {
    let mask = 0xFFu8.checked_shl(mask_bits as u32).unwrap_or(0);
    let data = raster.samples().chunks_exact(3).map(|p| masked_luma([p[0], p[1], p[2]], mask)).collect();
    GrayGrid::new(raster.width(), raster.height(), data)
}

#[inline]
fn laplacian_at(g: &GrayGrid, x: usize, y: usize) -> i32 {
    let (x, y) = (x as isize, y as isize);
    g.at(x, y - 1) + g.at(x, y + 1) + g.at(x - 1, y) + g.at(x + 1, y) - 4 * g.at(x, y)
}

#[inline]
fn sobel_at(g: &GrayGrid, x: usize, y: usize) -> i32 {
    let (x, y) = (x as isize, y as isize);
    let gx = (g.at(x + 1, y - 1) + 2 * g.at(x + 1, y) + g.at(x + 1, y + 1))
        - (g.at(x - 1, y - 1) + 2 * g.at(x - 1, y) + g.at(x - 1, y + 1));
    let gy = (g.at(x - 1, y + 1) + 2 * g.at(x, y + 1) + g.at(x + 1, y + 1))
        - (g.at(x - 1, y - 1) + 2 * g.at(x, y - 1) + g.at(x + 1, y - 1));
    gx.abs() + gy.abs()
}

#[inline]
fn fuzzy_membership(magnitude: i32, low: f64, high: f64) -> f64 {
    let m = magnitude as f64 / SOBEL_MAX;
    ((m - low) / (high - low)).clamp(0.0, 1.0)
}

/// Magnitude of the 4-neighbour Laplacian `[[0,1,0],[1,-4,1],[0,1,0]]`.
pub fn laplacian_edges(gray: &GrayGrid, threshold: f64) -> Result<EdgeMap> {
    gray.require_min(3)?;
    Ok(EdgeMap::from_fn(gray.width, gray.height, |x, y| laplacian_at(gray, x, y).abs() as f64 >= threshold))
}

/// Sobel gradient magnitude mapped through a linear fuzzy membership; edge iff membership ≥ 0.5.
pub fn fuzzy_edges(gray: &GrayGrid, fuzzy_low: f64, fuzzy_high: f64) -> Result<EdgeMap> {
    gray.require_min(3)?;
    Ok(EdgeMap::from_fn(gray.width, gray.height, |x, y| {
        fuzzy_membership(sobel_at(gray, x, y), fuzzy_low, fuzzy_high) >= 0.5
    }))
}

/// Quantized 1-D Gaussian, index 0 is the center tap. Weights sum to 65536.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianKernel {
    radius: usize,
    weights: Vec<i64>,
}

impl GaussianKernel {
    pub fn new(sigma: f64) -> Self {
        let radius = (3.0 * sigma).ceil().max(1.0) as usize;
        let raw: Vec<f64> = (0..=radius).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
        let total: f64 = raw[0] + 2.0 * raw[1..].iter().sum::<f64>();
        let mut weights: Vec<i64> = raw.iter().map(|g| (g / total * LOG_WEIGHT_ONE as f64).round() as i64).collect();
        let sum = weights[0] + 2 * weights[1..].iter().sum::<i64>();
        weights[0] += LOG_WEIGHT_ONE - sum;
        Self { radius, weights }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Weights for offsets `0..=radius`.
    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    #[inline]
    fn w(&self, offset: isize) -> i64 {
        self.weights[offset.unsigned_abs()]
    }

    /// Blurred value at `(x, y)` scaled by 2^32, evaluated directly in 2-D.
    fn blur_at(&self, g: &GrayGrid, x: isize, y: isize) -> i64 {
        let r = self.radius as isize;
        let mut acc = 0i64;
        for dy in -r..=r {
            let mut row = 0i64;
            for dx in -r..=r {
                row += self.w(dx) * g.at(x + dx, y + dy) as i64;
            }
            acc += self.w(dy) * row;
        }
        acc
    }

    /// Whole blurred image scaled by 2^32, evaluated separably.
    fn blur_full(&self, g: &GrayGrid) -> Vec<i64> {
        let (w, h) = (g.width, g.height);
        let r = self.radius as isize;
        let mut horiz = vec![0i64; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0i64;
                for dx in -r..=r {
                    acc += self.w(dx) * g.at(x as isize + dx, y as isize) as i64;
                }
                horiz[y * w + x] = acc;
            }
        }
        let mut out = vec![0i64; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0i64;
                for dy in -r..=r {
                    let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    acc += self.w(dy) * horiz[yy * w + x];
                }
                out[y * w + x] = acc;
            }
        }
        out
    }
}

#[inline]
fn log_is_edge(response: i64, threshold: f64) -> bool {
    response.unsigned_abs() as f64 >= threshold * LOG_SCALE
}

/// Gaussian blur followed by the 4-neighbour Laplacian, thresholded on magnitude.
pub fn log_edges(gray: &GrayGrid, sigma: f64, threshold: f64) -> Result<EdgeMap> {
    gray.require_min(5)?;
    let kernel = GaussianKernel::new(sigma);
    Ok(log_map(gray, &kernel, threshold))
}

fn log_map(gray: &GrayGrid, kernel: &GaussianKernel, threshold: f64) -> EdgeMap {
    let (w, h) = (gray.width, gray.height);
    let blurred = kernel.blur_full(gray);
    let b = |x: isize, y: isize| {
        let x = x.clamp(0, w as isize - 1) as usize;
        let y = y.clamp(0, h as isize - 1) as usize;
        blurred[y * w + x]
    };
    EdgeMap::from_fn(w, h, |x, y| {
        let (x, y) = (x as isize, y as isize);
        let resp = b(x, y - 1) + b(x, y + 1) + b(x - 1, y) + b(x + 1, y) - 4 * b(x, y);
        log_is_edge(resp, threshold)
    })
}

/// Union of the three detectors on the masked grayscale.
pub fn hybrid_edges(raster: &ImageRaster, params: &EdgeParams) -> Result<EdgeMap> {
    EdgeClassifier::new(raster, params)?.full_map()
}

/// Hybrid edge classification that can be evaluated either for the whole
/// image or for individual pixels on demand. Both paths give identical flags.
#[derive(Debug, Clone)]
pub struct EdgeClassifier {
    gray: GrayGrid,
    params: EdgeParams,
    kernel: GaussianKernel,
}

impl EdgeClassifier {
    pub fn new(raster: &ImageRaster, params: &EdgeParams) -> Result<Self> {
        params.validate()?;
        raster.require_min(5)?;
        Ok(Self {
            gray: masked_gray(raster, params.mask_bits),
            params: *params,
            kernel: GaussianKernel::new(params.log_sigma),
        })
    }

    pub fn gray(&self) -> &GrayGrid {
        &self.gray
    }

    /// Hybrid flag for a single pixel, computed from its neighbourhood only.
    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        let p = &self.params;
        let g = &self.gray;
        if laplacian_at(g, x, y).abs() as f64 >= p.laplacian_threshold {
            return true;
        }
        if fuzzy_membership(sobel_at(g, x, y), p.fuzzy_low, p.fuzzy_high) >= 0.5 {
            return true;
        }
        let (xi, yi) = (x as isize, y as isize);
        let (w, h) = (g.width as isize, g.height as isize);
        let b = |bx: isize, by: isize| self.kernel.blur_at(g, bx.clamp(0, w - 1), by.clamp(0, h - 1));
        let resp = b(xi, yi - 1) + b(xi, yi + 1) + b(xi - 1, yi) + b(xi + 1, yi) - 4 * b(xi, yi);
        log_is_edge(resp, p.log_threshold)
    }

    pub fn full_map(&self) -> Result<EdgeMap> {
        let p = &self.params;
        let lap = laplacian_edges(&self.gray, p.laplacian_threshold)?;
        let log = log_map(&self.gray, &self.kernel, p.log_threshold);
        let fuzzy = fuzzy_edges(&self.gray, p.fuzzy_low, p.fuzzy_high)?;
        Ok(lap.union(&log).union(&fuzzy))
    }
}
