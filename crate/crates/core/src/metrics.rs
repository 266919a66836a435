//! MSE, PSNR and mean SSIM between a cover and a stego image.

#[cfg(test)]
use crate::error::Error;
use crate::error::Result;
use crate::imaging::ImageRaster;

pub const PEAK: f64 = 255.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
pub const SSIM_C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub mse: f64,
    /// `f64::INFINITY` for identical images.
    pub psnr: f64,
    pub ssim: f64,
}

/// Mean squared difference over every channel sample.
pub fn mse(c: &ImageRaster, s: &ImageRaster) -> Result<f64> {
    c.same_dimensions(s)?;
    let sum: u64 = c
        .samples()
        .iter()
        .zip(s.samples())
        .map(|(&a, &b)| {
            let d = a as i64 - b as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / c.samples().len() as f64)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    }
}

pub fn psnr(c: &ImageRaster, s: &ImageRaster) -> Result<f64> {
    Ok(psnr_from_mse(mse(c, s)?))
}

/// BT.601 luma in double precision.
pub fn luma(raster: &ImageRaster) -> Vec<f64> {
    raster.samples().chunks_exact(3).map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64).collect()
}

/// Normalized 1-D Gaussian of length `SSIM_WINDOW`.
pub fn ssim_kernel() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut k = [0.0; SSIM_WINDOW];
    for (i, w) in k.iter_mut().enumerate() {
        let d = i as f64 - r;
        *w = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= total);
    k
}

/// Separable weighted sums over every fully contained window.
fn window_sums(plane: &[f64], width: usize, height: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let n = SSIM_WINDOW;
    let ow = width - n + 1;
    let oh = height - n + 1;
    let mut horiz = vec![0.0; ow * height];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..ow {
            horiz[y * ow + x] = row[x..x + n].iter().zip(k).map(|(v, w)| v * w).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|i| horiz[(y + i) * ow + x] * k[i]).sum();
        }
    }
    out
}

/// Mean SSIM over all 11x11 Gaussian-weighted windows (stride 1) of the luma planes.
pub fn ssim(c: &ImageRaster, s: &ImageRaster) -> Result<f64> {
    c.same_dimensions(s)?;
    c.require_min(SSIM_WINDOW)?;
    let (w, h) = (c.width(), c.height());
    let x = luma(c);
    let y = luma(s);
    let k = ssim_kernel();
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).collect::<Vec<_>>();

    let mu_x = window_sums(&x, w, h, &k);
    let mu_y = window_sums(&y, w, h, &k);
    let xx = window_sums(&sq(&x, &x), w, h, &k);
    let yy = window_sums(&sq(&y, &y), w, h, &k);
    let xy = window_sums(&sq(&x, &y), w, h, &k);

    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = xx[i] - mx * mx;
            let vy = yy[i] - my * my;
            let cov = xy[i] - mx * my;
            ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2)) / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2))
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}

pub fn quality(c: &ImageRaster, s: &ImageRaster) -> Result<QualityReport> {
    let mse = mse(c, s)?;
    Ok(QualityReport { mse, psnr: psnr_from_mse(mse), ssim: ssim(c, s)? })
}

impl QualityReport {
    /// PSNR as printed by the CLI and bench tables.
    pub fn psnr_display(&self) -> String {
        format_psnr(self.psnr)
    }
}

pub fn format_psnr(psnr: f64) -> String {
    if psnr.is_infinite() {
        "inf".to_string()
    } else {
        format!("{psnr:.4}")
    }
}
