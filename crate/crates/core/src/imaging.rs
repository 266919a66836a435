//! Lossless raster I/O and quadrant geometry.
//!
//! Only PNG and uncompressed BMP are accepted. Anything that re-encodes pixels
//! lossily would destroy embedded bits, so such containers are rejected rather
//! than converted.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};

/// 8-bit RGB pixel grid, samples stored row-major as R,G,B.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageRaster {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl std::fmt::Debug for ImageRaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageRaster").field("width", &self.width).field("height", &self.height).finish_non_exhaustive()
    }
}

impl ImageRaster {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ImageTooSmall { width, height, min: 1 });
        }
        if samples.len() != width * height * 3 {
            return Err(Error::MalformedFile(format!("{} samples for a {width}x{height} raster", samples.len())));
        }
        Ok(Self { width, height, samples })
    }

    /// Raster filled with a single color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let samples = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self::new(width, height, samples)
    }

    /// Build a raster from a per-pixel function `f(x, y) -> [r, g, b]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut samples = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                samples.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.samples[i], self.samples[i + 1], self.samples[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.samples[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_dimensions(&self, other: &ImageRaster) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(self.width, self.height, other.width, other.height));
        }
        Ok(())
    }

    pub(crate) fn require_min(&self, min: usize) -> Result<()> {
        if self.width < min || self.height < min {
            return Err(Error::ImageTooSmall { width: self.width, height: self.height, min });
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.w && y >= self.y0 && y < self.y0 + self.h
    }

    /// Pixel coordinates in raster order.
    pub fn iter(self) -> impl Iterator<Item = (usize, usize)> {
        let Rect { x0, y0, w, h } = self;
        (y0..y0 + h).flat_map(move |y| (x0..x0 + w).map(move |x| (x, y)))
    }
}

/// Four rectangles, indexed top-left, top-right, bottom-left, bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadrantGeometry(pub [Rect; 4]);

impl QuadrantGeometry {
    pub fn get(&self, index: usize) -> Rect {
        self.0[index]
    }
}

/// Split at `floor(w/2)`, `floor(h/2)`; right and bottom quadrants take the odd column/row.
pub fn quadrants(raster: &ImageRaster) -> Result<QuadrantGeometry> {
    quadrants_for(raster.width(), raster.height())
}

pub fn quadrants_for(width: usize, height: usize) -> Result<QuadrantGeometry> {
    if width < 2 || height < 2 {
        return Err(Error::ImageTooSmall { width, height, min: 2 });
    }
    let (sx, sy) = (width / 2, height / 2);
    Ok(QuadrantGeometry([
        Rect { x0: 0, y0: 0, w: sx, h: sy },
        Rect { x0: sx, y0: 0, w: width - sx, h: sy },
        Rect { x0: 0, y0: sy, w: sx, h: height - sy },
        Rect { x0: sx, y0: sy, w: width - sx, h: height - sy },
    ]))
}

/// Load a PNG or BMP file as 8-bit RGB.
///
/// Grayscale is replicated into three channels and alpha is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageRaster> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<ImageRaster> {
    let format = image::guess_format(bytes).map_err(|_| Error::UnsupportedFormat("unrecognized container".into()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Bmp) {
        return Err(Error::UnsupportedFormat(format!("{format:?} is not a lossless raster format")));
    }
    let decoded =
        image::load_from_memory_with_format(bytes, format).map_err(|e| Error::MalformedFile(e.to_string()))?;
    let rgb = to_rgb8(decoded);
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    ImageRaster::new(w, h, rgb.into_raw())
}

fn to_rgb8(img: DynamicImage) -> RgbImage {
    match img {
        DynamicImage::ImageRgb8(rgb) => rgb,
        other => other.to_rgb8(),
    }
}

/// Write `raster` losslessly; the container is chosen by extension (`.png` or `.bmp`).
pub fn save_image(raster: &ImageRaster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).unwrap_or_default();
    let format = match ext.as_str() {
        "png" => ImageFormat::Png,
        "bmp" => ImageFormat::Bmp,
        other => return Err(Error::UnsupportedFormat(format!("cannot write '.{other}', use .png or .bmp"))),
    };
    let bytes = encode_image(raster, format)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn encode_image(raster: &ImageRaster, format: ImageFormat) -> Result<Vec<u8>> {
    let img = RgbImage::from_raw(raster.width() as u32, raster.height() as u32, raster.samples().to_vec())
        .expect("raster invariant guarantees buffer length");
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, format).map_err(|e| Error::MalformedFile(e.to_string()))?;
    Ok(out.into_inner())
}
