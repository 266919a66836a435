//! Oracles shared by integration tests.

#![allow(dead_code)]

use stegret::ImageRaster;

/// Direct double-loop evaluation of windowed SSIM with 2-D Gaussian weights.
pub fn ssim_brute_force(a: &ImageRaster, b: &ImageRaster) -> f64 {
    let gray = |r: &ImageRaster, x: usize, y: usize| {
        let p = r.pixel(x, y);
        0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
    };
    let n = 11;
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let raw: Vec<f64> = (0..n).map(|i| (-((i as f64 - 5.0).powi(2)) / (2.0 * 1.5 * 1.5)).exp()).collect();
    let norm: f64 = raw.iter().sum();
    let k1: Vec<f64> = raw.iter().map(|v| v / norm).collect();
    let (w, h) = (a.width(), a.height());
    let mut total = 0.0;
    let mut count = 0;
    for y0 in 0..=h - n {
        for x0 in 0..=w - n {
            let (mut mx, mut my) = (0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    let wt = k1[i] * k1[j];
                    mx += wt * gray(a, x0 + i, y0 + j);
                    my += wt * gray(b, x0 + i, y0 + j);
                }
            }
            let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..n {
                for i in 0..n {
                    let wt = k1[i] * k1[j];
                    let dx = gray(a, x0 + i, y0 + j) - mx;
                    let dy = gray(b, x0 + i, y0 + j) - my;
                    vx += wt * dx * dx;
                    vy += wt * dy * dy;
                    cov += wt * dx * dy;
                }
            }
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    total / count as f64
}

/// Sample index and bit position of payload bit `bit` of block `block`, found by
/// walking the documented traversal independently of the embedder.
pub fn locate_payload_bit(
    stego: &ImageRaster,
    cfg: &stegret::EmbedConfig,
    sk: &stegret::StegoKey,
    block: usize,
    bit: usize,
) -> Option<(usize, u8)> {
    let w = stego.width();
    let map = stegret::edges::hybrid_edges(stego, &cfg.edge_params).ok()?;
    let quadrant = stegret::imaging::quadrants(stego).ok()?.get(stegret::payload::quadrant_permutation(sk)[block]);
    let mut seen = 0;
    for (x, y) in quadrant.iter() {
        if y * w + x < 91 {
            continue;
        }
        let k = if map.get(x, y) { cfg.k_edge } else { cfg.k_smooth } as usize;
        for c in 0..3 {
            if bit < seen + k {
                return Some(((y * w + x) * 3 + c, (k - 1 - (bit - seen)) as u8));
            }
            seen += k;
        }
    }
    None
}
