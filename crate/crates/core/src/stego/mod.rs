//! Edge-adaptive semantic hiding (ESHA) and the LSB-family baselines.
//!
//! # ESH1 bit layout
//!
//! * Header: the 272 header bits go into bit 0 of samples `0..272` in raster
//!   order (pixels `0..91`, channels R,G,B). The B channel of pixel 90 is unused.
//! * Block `i` of the sealed payload is written into quadrant `perm[i]`, where
//!   `perm` comes from the stego key. Each quadrant is walked in raster order,
//!   skipping header pixels, channels R,G,B.
//! * A sample at an edge pixel carries `k_edge` bits, a smooth one `k_smooth`.
//!   Payload bits fill the sample's low-bit field most-significant first; the
//!   last sample of a block may be only partly used, its remaining low bits
//!   stay untouched.
//! * Edge flags come from the hybrid detector on the grayscale with the low
//!   `k_edge` bits masked, so embedding never changes them.

mod baselines;

pub use baselines::{lsb_embed, lsb_extract, lsbm_embed, lsbm_extract, lsbmr_embed, lsbmr_extract};

use crate::bits::{BitCursor, BitSink};
use crate::edges::{EdgeClassifier, EdgeMap, EdgeParams};
use crate::error::{Error, Result};
use crate::imaging::{quadrants, ImageRaster, Rect};
use crate::payload::{self, EncryptionKey, PayloadHeader, SemanticRecord, StegoKey, HEADER_BITS, HEADER_LEN};

/// Pixels reserved for the plaintext header.
pub const HEADER_PIXELS: usize = HEADER_BITS.div_ceil(3);

/// Smallest width and height accepted by embedding, extraction and capacity.
pub const MIN_SIDE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedConfig {
    pub k_smooth: u8,
    pub k_edge: u8,
    pub edge_params: EdgeParams,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self::new(1, 3)
    }
}

impl EmbedConfig {
    /// Config with default edge parameters and `mask_bits = k_edge`.
    pub fn new(k_smooth: u8, k_edge: u8) -> Self {
        Self { k_smooth, k_edge, edge_params: EdgeParams { mask_bits: k_edge, ..EdgeParams::default() } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.k_smooth && self.k_smooth <= self.k_edge && self.k_edge <= 4) {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= k_smooth <= k_edge <= 4, got k_smooth={} k_edge={}",
                self.k_smooth, self.k_edge
            )));
        }
        if self.edge_params.mask_bits != self.k_edge {
            return Err(Error::InvalidConfig("edge mask_bits must equal k_edge".into()));
        }
        self.edge_params.validate()
    }

    fn bits_for(&self, edge: bool) -> u8 {
        if edge {
            self.k_edge
        } else {
            self.k_smooth
        }
    }
}

/// A raster carrying an ESH1 payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StegoImage {
    raster: ImageRaster,
    payload_bits: usize,
    capacity_bits: usize,
}

impl StegoImage {
    pub fn raster(&self) -> &ImageRaster {
        &self.raster
    }

    pub fn into_raster(self) -> ImageRaster {
        self.raster
    }

    /// Bits written outside the header.
    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    pub fn capacity_bits(&self) -> usize {
        self.capacity_bits
    }
}

fn is_header_pixel(width: usize, x: usize, y: usize) -> bool {
    y * width + x < HEADER_PIXELS
}

/// Payload bits each quadrant can hold.
pub fn quadrant_capacities(raster: &ImageRaster, cfg: &EmbedConfig) -> Result<[usize; 4]> {
    cfg.validate()?;
    raster.require_min(MIN_SIDE)?;
    let geometry = quadrants(raster)?;
    let map = EdgeClassifier::new(raster, &cfg.edge_params)?.full_map()?;
    Ok(slot_totals(&geometry.0, raster.width(), cfg, &map))
}

fn slot_totals(rects: &[Rect; 4], width: usize, cfg: &EmbedConfig, map: &EdgeMap) -> [usize; 4] {
    rects.map(|rect| slots(rect, width, cfg, |x, y| map.get(x, y)).map(|(_, k)| k as usize).sum())
}

/// Total payload bits outside the header region.
pub fn capacity(raster: &ImageRaster, cfg: &EmbedConfig) -> Result<usize> {
    Ok(quadrant_capacities(raster, cfg)?.iter().sum())
}

fn write_header(samples: &mut [u8], header: &PayloadHeader) {
    let bytes = header.to_bytes();
    let mut bits = BitCursor::new(&bytes);
    for s in samples.iter_mut().take(HEADER_BITS) {
        let bit = bits.next_bit().expect("header has 272 bits") as u8;
        *s = (*s & !1) | bit;
    }
}

fn read_header_bytes(raster: &ImageRaster) -> Result<[u8; HEADER_LEN]> {
    if raster.pixel_count() < HEADER_PIXELS {
        return Err(Error::NoPayload);
    }
    let mut sink = BitSink::with_capacity_bits(HEADER_BITS);
    for &s in &raster.samples()[..HEADER_BITS] {
        sink.push(s & 1 == 1);
    }
    Ok(sink.into_bytes().try_into().expect("272 bits"))
}

/// Decode and validate the plaintext header without any keys.
pub fn probe_header(raster: &ImageRaster) -> Result<PayloadHeader> {
    PayloadHeader::parse(&read_header_bytes(raster)?)
}

/// Sample slots of one quadrant in traversal order: `(sample index, bits)`.
fn slots<'a>(
    rect: Rect,
    width: usize,
    cfg: &'a EmbedConfig,
    is_edge: impl Fn(usize, usize) -> bool + 'a,
) -> impl Iterator<Item = (usize, u8)> + 'a {
    rect.iter().filter(move |&(x, y)| !is_header_pixel(width, x, y)).flat_map(move |(x, y)| {
        let k = cfg.bits_for(is_edge(x, y));
        let base = (y * width + x) * 3;
        (0..3).map(move |c| (base + c, k))
    })
}

pub fn esha_embed(
    cover: &ImageRaster,
    rec: &SemanticRecord,
    ek: &EncryptionKey,
    sk: &StegoKey,
    cfg: &EmbedConfig,
) -> Result<StegoImage> {
    cfg.validate()?;
    cover.require_min(MIN_SIDE)?;
    let (header, blocks) = payload::seal(rec, ek, sk)?;
    let geometry = quadrants(cover)?;
    let classifier = EdgeClassifier::new(cover, &cfg.edge_params)?;
    let map = classifier.full_map()?;
    if cover.pixel_count() < HEADER_PIXELS {
        return Err(Error::CapacityExceeded { needed: HEADER_BITS, available: cover.pixel_count() * 3 });
    }

    let width = cover.width();
    let perm = payload::quadrant_permutation(sk);
    let payload_bits: usize = blocks.iter().map(|b| b.len() * 8).sum();
    let quad_caps = slot_totals(&geometry.0, width, cfg, &map);
    let capacity_bits: usize = quad_caps.iter().sum();
    if payload_bits > capacity_bits {
        return Err(Error::CapacityExceeded { needed: payload_bits, available: capacity_bits });
    }
    for (i, block) in blocks.iter().enumerate() {
        let available = quad_caps[perm[i]];
        if block.len() * 8 > available {
            return Err(Error::CapacityExceeded { needed: block.len() * 8, available });
        }
    }

    let mut stego = cover.clone();
    let samples = stego.samples_mut();
    write_header(samples, &header);
    for (i, block) in blocks.iter().enumerate() {
        let mut bits = BitCursor::new(block);
        for (idx, k) in slots(geometry.get(perm[i]), width, cfg, |x, y| map.get(x, y)) {
            if bits.remaining() == 0 {
                break;
            }
            let mut s = samples[idx];
            for pos in (0..k).rev() {
                let Some(bit) = bits.next_bit() else { break };
                s = (s & !(1 << pos)) | ((bit as u8) << pos);
            }
            samples[idx] = s;
        }
    }
    Ok(StegoImage { raster: stego, payload_bits, capacity_bits })
}

pub fn esha_extract(
    stego: &ImageRaster,
    ek: &EncryptionKey,
    sk: &StegoKey,
    cfg: &EmbedConfig,
) -> Result<SemanticRecord> {
    cfg.validate()?;
    stego.require_min(MIN_SIDE)?;
    let header = probe_header(stego)?;
    let geometry = quadrants(stego)?;
    let classifier = EdgeClassifier::new(stego, &cfg.edge_params)?;
    let perm = payload::quadrant_permutation(sk);
    let width = stego.width();
    let samples = stego.samples();

    let read_block = |i: usize| -> Result<Vec<u8>> {
        let want = header.block_lens[i] as usize * 8;
        let mut sink = BitSink::with_capacity_bits(want);
        for (idx, k) in slots(geometry.get(perm[i]), width, cfg, |x, y| classifier.is_edge(x, y)) {
            if sink.len() == want {
                break;
            }
            let s = samples[idx];
            for pos in (0..k).rev() {
                if sink.len() == want {
                    break;
                }
                sink.push((s >> pos) & 1 == 1);
            }
        }
        if sink.len() < want {
            return Err(Error::IntegrityFailure);
        }
        Ok(sink.into_bytes())
    };
    let blocks = [read_block(0)?, read_block(1)?, read_block(2)?, read_block(3)?];
    payload::open(&header, blocks, ek, sk)
}
