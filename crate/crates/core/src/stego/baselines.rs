//! Sequential LSB, LSB matching and LSB matching revisited.
//!
//! All three walk samples in raster order with channels interleaved. The ±1
//! choices of the matching variants are driven by a keystream so runs are
//! reproducible.

use crate::error::{Error, Result};
use crate::imaging::ImageRaster;
use crate::payload::{Keystream, StegoKey};

fn check_fit(needed: usize, available: usize) -> Result<()> {
    if needed > available {
        return Err(Error::CapacityExceeded { needed, available });
    }
    Ok(())
}

fn check_k(k: u8) -> Result<()> {
    if !(1..=8).contains(&k) {
        return Err(Error::InvalidConfig(format!("bits per sample must be 1..=8, got {k}")));
    }
    Ok(())
}

/// Overwrite the `k` low bits of successive samples, most significant payload bit first.
pub fn lsb_embed(cover: &ImageRaster, bits: &[bool], k: u8) -> Result<ImageRaster> {
    check_k(k)?;
    let k = k as usize;
    check_fit(bits.len(), cover.samples().len() * k)?;
    let mut out = cover.clone();
    for (s, chunk) in out.samples_mut().iter_mut().zip(bits.chunks(k)) {
        for (j, &bit) in chunk.iter().enumerate() {
            let pos = k - 1 - j;
            *s = (*s & !(1 << pos)) | ((bit as u8) << pos);
        }
    }
    Ok(out)
}

pub fn lsb_extract(raster: &ImageRaster, n: usize, k: u8) -> Result<Vec<bool>> {
    check_k(k)?;
    let k = k as usize;
    check_fit(n, raster.samples().len() * k)?;
    Ok(raster.samples().iter().flat_map(|&s| (0..k).rev().map(move |pos| (s >> pos) & 1 == 1)).take(n).collect())
}

/// Bit source for the random ±1 decisions.
struct CoinFlips {
    stream: Keystream,
    byte: u8,
    left: u8,
}

impl CoinFlips {
    fn new(key: &StegoKey) -> Self {
        Self { stream: Keystream::new(key.as_bytes(), 0), byte: 0, left: 0 }
    }

    fn flip(&mut self) -> bool {
        if self.left == 0 {
            self.byte = self.stream.next_byte();
            self.left = 8;
        }
        self.left -= 1;
        (self.byte >> self.left) & 1 == 1
    }
}

/// Random ±1 step, forced inward at the range ends.
fn step(value: u8, coin: &mut CoinFlips) -> u8 {
    match value {
        0 => 1,
        255 => 254,
        v if coin.flip() => v + 1,
        v => v - 1,
    }
}

/// LSB matching: samples whose LSB already equals the bit stay put, others move by ±1.
pub fn lsbm_embed(cover: &ImageRaster, bits: &[bool], key: &StegoKey) -> Result<ImageRaster> {
    check_fit(bits.len(), cover.samples().len())?;
    let mut coin = CoinFlips::new(key);
    let mut out = cover.clone();
    for (s, &bit) in out.samples_mut().iter_mut().zip(bits) {
        if (*s & 1 == 1) != bit {
            *s = step(*s, &mut coin);
        }
    }
    Ok(out)
}

pub fn lsbm_extract(raster: &ImageRaster, n: usize) -> Result<Vec<bool>> {
    lsb_extract(raster, n, 1)
}

#[inline]
fn pair_bit(a: i32, b: i32) -> bool {
    (a.div_euclid(2) + b) & 1 == 1
}

/// LSB matching revisited: each sample pair carries two bits, `b1 = LSB(p1)` and
/// `b2 = LSB(floor(p1/2) + p2)`, with at most one ±1 change per pair away from
/// saturated values.
///
/// When the required `p1 ± 1` would leave `[0, 255]`, `p1` takes the only
/// in-range neighbour and `p2` is adjusted by ±1 if the second relation still
/// fails.
pub fn lsbmr_embed(cover: &ImageRaster, bits: &[bool], key: &StegoKey) -> Result<ImageRaster> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::OddBitCount(bits.len()));
    }
    let pairs = cover.samples().len() / 2;
    check_fit(bits.len(), pairs * 2)?;
    let mut coin = CoinFlips::new(key);
    let mut out = cover.clone();
    let samples = out.samples_mut();
    for (pair, msg) in samples.chunks_exact_mut(2).zip(bits.chunks_exact(2)) {
        let (m1, m2) = (msg[0], msg[1]);
        let (x1, x2) = (pair[0] as i32, pair[1] as i32);
        if (x1 & 1 == 1) == m1 {
            if pair_bit(x1, x2) != m2 {
                pair[1] = step(pair[1], &mut coin);
            }
            continue;
        }
        let preferred = if pair_bit(x1 - 1, x2) == m2 { x1 - 1 } else { x1 + 1 };
        if (0..=255).contains(&preferred) {
            pair[0] = preferred as u8;
        } else {
            let fallback = if preferred < 0 { x1 + 1 } else { x1 - 1 };
            pair[0] = fallback as u8;
            if pair_bit(fallback, x2) != m2 {
                pair[1] = step(pair[1], &mut coin);
            }
        }
    }
    Ok(out)
}

pub fn lsbmr_extract(raster: &ImageRaster, n: usize) -> Result<Vec<bool>> {
    if !n.is_multiple_of(2) {
        return Err(Error::OddBitCount(n));
    }
    check_fit(n, raster.samples().len() / 2 * 2)?;
    Ok(raster
        .samples()
        .chunks_exact(2)
        .flat_map(|p| {
            let (a, b) = (p[0] as i32, p[1] as i32);
            [a & 1 == 1, pair_bit(a, b)]
        })
        .take(n)
        .collect())
}
