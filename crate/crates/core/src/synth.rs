//! Deterministic synthetic imagery for fixtures, benches and demos.
//!
//! Everything here is a pure function of its seed. The "standard" generator
//! mimics natural photographs (smooth shading, a few sharp-edged objects,
//! sensor noise); the class generator produces ten visually distinct scene
//! types named after the COREL categories.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imaging::{save_image, ImageRaster};
use crate::semantics::COREL_CLASSES;

type Rgb = [f64; 3];

/// Bilinearly interpolated lattice noise in [0, 1] with roughly `cell`-pixel features.
fn value_noise(rng: &mut ChaCha8Rng, w: usize, h: usize, cell: usize) -> Vec<f64> {
    let cell = cell.max(1);
    let gw = w / cell + 2;
    let gh = h / cell + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.gen()).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let fy = y as f64 / cell as f64;
        let (y0, ty) = (fy.floor() as usize, fy.fract());
        for x in 0..w {
            let fx = x as f64 / cell as f64;
            let (x0, tx) = (fx.floor() as usize, fx.fract());
            let g = |gx: usize, gy: usize| grid[gy * gw + gx];
            let top = g(x0, y0) * (1.0 - tx) + g(x0 + 1, y0) * tx;
            let bot = g(x0, y0 + 1) * (1.0 - tx) + g(x0 + 1, y0 + 1) * tx;
            out.push(top * (1.0 - ty) + bot * ty);
        }
    }
    out
}

fn random_color(rng: &mut ChaCha8Rng) -> Rgb {
    [rng.gen_range(20.0..235.0), rng.gen_range(20.0..235.0), rng.gen_range(20.0..235.0)]
}

fn jitter(rng: &mut ChaCha8Rng, c: Rgb, amount: f64) -> Rgb {
    c.map(|v| v + rng.gen_range(-amount..=amount))
}

fn to_u8(c: Rgb) -> [u8; 3] {
    c.map(|v| v.round().clamp(0.0, 255.0) as u8)
}

fn mix(a: Rgb, b: Rgb, t: f64) -> Rgb {
    [0, 1, 2].map(|i| a[i] * (1.0 - t) + b[i] * t)
}

#[derive(Clone, Copy)]
enum Shape {
    Ellipse {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
    },
    Rect {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
    /// Upward triangle with apex at (cx, top) and base on y = base.
    Peak {
        cx: f64,
        top: f64,
        base: f64,
        half: f64,
    },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => {
                let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
                dx * dx + dy * dy <= 1.0
            }
            Shape::Rect { x0, y0, x1, y1 } => (x0..x1).contains(&x) && (y0..y1).contains(&y),
            Shape::Peak { cx, top, base, half } => {
                y >= top && y <= base && (x - cx).abs() <= half * (y - top) / (base - top)
            }
        }
    }
}

/// A photograph-like image: shaded background, sharp objects, mild noise.
pub fn standard_image(seed: u64, width: usize, height: usize) -> Result<ImageRaster> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let (c0, c1) = (random_color(&mut rng), random_color(&mut rng));
    let shade = value_noise(&mut rng, width, height, (width.max(height) / 3).max(2));
    let detail = value_noise(&mut rng, width, height, 6);
    let objects: Vec<(Shape, Rgb, f64)> = (0..rng.gen_range(3..8))
        .map(|_| {
            let shape = if rng.gen_bool(0.6) {
                Shape::Ellipse {
                    cx: rng.gen_range(0.0..w),
                    cy: rng.gen_range(0.0..h),
                    rx: rng.gen_range(0.05..0.3) * w,
                    ry: rng.gen_range(0.05..0.3) * h,
                }
            } else {
                let (x0, y0) = (rng.gen_range(0.0..0.8) * w, rng.gen_range(0.0..0.8) * h);
                Shape::Rect { x0, y0, x1: x0 + rng.gen_range(0.1..0.4) * w, y1: y0 + rng.gen_range(0.1..0.4) * h }
            };
            (shape, random_color(&mut rng), rng.gen_range(0.0..1.0))
        })
        .collect();
    let texture = rng.gen_range(8.0..30.0);
    let grain = rng.gen_range(1.0..4.0);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    ImageRaster::from_fn(width, height, |x, y| {
        let i = y * width + x;
        let (fx, fy) = (x as f64, y as f64);
        let mut c = mix(c0, c1, 0.5 * (fy / h) + 0.5 * shade[i]);
        for (shape, color, gradient) in &objects {
            if shape.contains(fx, fy) {
                c = mix(*color, [255.0; 3], gradient * 0.4 * fx / w);
            }
        }
        let t = (detail[i] - 0.5) * texture;
        let n = noise_rng.gen_range(-grain..=grain);
        to_u8(c.map(|v| v + t + n))
    })
}

/// Scene recipe for one class.
struct Recipe {
    top: Rgb,
    bottom: Rgb,
    horizon: f64,
    object: Rgb,
    accent: Rgb,
    kind: ObjectKind,
    texture: f64,
}

#[derive(Clone, Copy)]
enum ObjectKind {
    None,
    Blobs(usize),
    Boxes(usize),
    Peaks(usize),
    Body,
}

fn recipe(class: &str) -> Option<Recipe> {
    use ObjectKind::*;
    let r = |top, bottom, horizon, object, accent, kind, texture| Recipe {
        top,
        bottom,
        horizon,
        object,
        accent,
        kind,
        texture,
    };
    Some(match class {
        "beach" => r([90.0, 160.0, 230.0], [225.0, 200.0, 150.0], 0.5, [40.0, 90.0, 170.0], [250.0; 3], None, 10.0),
        "buildings" => r(
            [170.0, 190.0, 210.0],
            [110.0, 110.0, 115.0],
            0.8,
            [150.0, 140.0, 130.0],
            [60.0, 60.0, 70.0],
            Boxes(5),
            12.0,
        ),
        "buses" => {
            r([150.0, 150.0, 150.0], [70.0, 70.0, 75.0], 0.7, [230.0, 190.0, 20.0], [30.0, 30.0, 40.0], Boxes(1), 8.0)
        }
        "dinosaurs" => {
            r([235.0, 235.0, 225.0], [215.0, 210.0, 195.0], 0.8, [110.0, 90.0, 60.0], [70.0, 60.0, 40.0], Body, 6.0)
        }
        "elephants" => {
            r([200.0, 180.0, 130.0], [170.0, 140.0, 80.0], 0.45, [120.0, 115.0, 110.0], [90.0, 85.0, 80.0], Body, 14.0)
        }
        "flowers" => {
            r([40.0, 110.0, 40.0], [25.0, 80.0, 30.0], 0.3, [220.0, 40.0, 140.0], [250.0, 220.0, 40.0], Blobs(9), 20.0)
        }
        "food" => r(
            [245.0, 240.0, 235.0],
            [230.0, 225.0, 215.0],
            0.5,
            [200.0, 80.0, 30.0],
            [120.0, 160.0, 50.0],
            Blobs(4),
            10.0,
        ),
        "horses" => {
            r([120.0, 170.0, 90.0], [80.0, 140.0, 60.0], 0.35, [120.0, 70.0, 40.0], [40.0, 25.0, 15.0], Body, 14.0)
        }
        "mountains" => {
            r([110.0, 150.0, 210.0], [90.0, 110.0, 90.0], 0.75, [100.0, 105.0, 125.0], [245.0; 3], Peaks(3), 12.0)
        }
        "people" => r(
            [150.0, 100.0, 70.0],
            [100.0, 60.0, 40.0],
            0.6,
            [200.0, 150.0, 110.0],
            [180.0, 40.0, 40.0],
            Blobs(3),
            16.0,
        ),
        "sky" => r([70.0, 130.0, 220.0], [180.0, 210.0, 245.0], 1.0, [245.0; 3], [230.0; 3], Blobs(4), 6.0),
        _ => return Option::None,
    })
}

/// A scene of `class` (one of [`COREL_CLASSES`] or "sky").
pub fn class_image(class: &str, seed: u64, width: usize, height: usize) -> Result<ImageRaster> {
    let rc = recipe(class).ok_or_else(|| Error::InvalidConfig(format!("no synthetic recipe for class '{class}'")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ crate::payload::fnv1a64(class.as_bytes()));
    let (w, h) = (width as f64, height as f64);
    let top = jitter(&mut rng, rc.top, 12.0);
    let bottom = jitter(&mut rng, rc.bottom, 12.0);
    let object = jitter(&mut rng, rc.object, 15.0);
    let accent = jitter(&mut rng, rc.accent, 10.0);
    let horizon = (rc.horizon + rng.gen_range(-0.08..0.08)) * h;
    let mut shapes: Vec<(Shape, Rgb)> = Vec::new();
    match rc.kind {
        ObjectKind::None => {
            let band = horizon + rng.gen_range(0.0..0.1) * h;
            shapes.push((Shape::Rect { x0: 0.0, y0: horizon, x1: w, y1: band }, object));
        }
        ObjectKind::Blobs(n) => {
            for i in 0..n {
                let r = rng.gen_range(0.06..0.16) * w.min(h);
                let s =
                    Shape::Ellipse { cx: rng.gen_range(0.1..0.9) * w, cy: rng.gen_range(0.15..0.85) * h, rx: r, ry: r };
                shapes.push((s, if i % 3 == 2 { accent } else { object }));
            }
        }
        ObjectKind::Boxes(n) => {
            for i in 0..n {
                let bw = rng.gen_range(0.5..0.8) * w / n as f64 + if n == 1 { 0.4 * w } else { 0.0 };
                let x0 = (i as f64 / n as f64) * w + rng.gen_range(0.0..0.05) * w;
                let y0 = rng.gen_range(0.15..0.45) * h;
                shapes.push((Shape::Rect { x0, y0, x1: x0 + bw, y1: horizon.max(y0 + 0.2 * h) }, object));
                // windows
                let step = (bw / 4.0).max(2.0);
                let mut wy = y0 + step * 0.5;
                while wy + step * 0.5 < horizon.min(y0 + 0.6 * h) {
                    shapes.push((
                        Shape::Rect { x0: x0 + step * 0.5, y0: wy, x1: x0 + bw - step * 0.5, y1: wy + step * 0.4 },
                        accent,
                    ));
                    wy += step;
                }
            }
        }
        ObjectKind::Peaks(n) => {
            for _ in 0..n {
                let cx = rng.gen_range(0.1..0.9) * w;
                let top_y = rng.gen_range(0.1..0.35) * h;
                let half = rng.gen_range(0.25..0.45) * w;
                shapes.push((Shape::Peak { cx, top: top_y, base: horizon, half }, object));
                let snow = top_y + 0.25 * (horizon - top_y);
                shapes.push((Shape::Peak { cx, top: top_y, base: snow, half: half * 0.25 }, accent));
            }
        }
        ObjectKind::Body => {
            let cx = rng.gen_range(0.35..0.65) * w;
            let cy = rng.gen_range(0.45..0.6) * h;
            let (rx, ry) = (rng.gen_range(0.2..0.3) * w, rng.gen_range(0.12..0.2) * h);
            shapes.push((Shape::Ellipse { cx, cy, rx, ry }, object));
            let dir = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let head = Shape::Ellipse { cx: cx + dir * rx, cy: cy - ry, rx: rx * 0.35, ry: ry * 0.6 };
            shapes.push((head, object));
            for leg in [-0.6, -0.2, 0.2, 0.6] {
                let lx = cx + leg * rx;
                shapes.push((Shape::Rect { x0: lx - 0.03 * w, y0: cy, x1: lx + 0.03 * w, y1: cy + ry * 2.2 }, accent));
            }
        }
    }
    let detail = value_noise(&mut rng, width, height, 5);
    let mut grain = ChaCha8Rng::seed_from_u64(seed.rotate_left(17));
    ImageRaster::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let mut c = if fy < horizon {
            mix(top, bottom, 0.3 * fy / horizon.max(1.0))
        } else {
            mix(bottom, top, 0.2 * (1.0 - (fy - horizon) / (h - horizon).max(1.0)))
        };
        for (shape, color) in &shapes {
            if shape.contains(fx, fy) {
                c = *color;
            }
        }
        let t = (detail[y * width + x] - 0.5) * rc.texture;
        let n: f64 = grain.gen_range(-2.0..=2.0);
        to_u8(c.map(|v| v + t + n))
    })
}

/// Write `count` standard images named `std_000.png`, … into `dir`.
pub fn write_standard_corpus(
    dir: impl AsRef<Path>,
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..count)
        .map(|i| {
            let path = dir.join(format!("std_{i:03}.png"));
            save_image(&standard_image(seed.wrapping_add(i as u64), width, height)?, &path)?;
            Ok(path)
        })
        .collect()
}

/// Write `per_class` images for each COREL class as `dir/<class>/<class>_NN.png`.
pub fn write_class_corpus(
    dir: impl AsRef<Path>,
    per_class: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Vec<(String, PathBuf)>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for class in COREL_CLASSES {
        let class_dir = dir.join(class);
        std::fs::create_dir_all(&class_dir).map_err(|e| Error::io(&class_dir, e))?;
        for i in 0..per_class {
            let path = class_dir.join(format!("{class}_{i:02}.png"));
            save_image(&class_image(class, seed.wrapping_add(i as u64), width, height)?, &path)?;
            out.push((class.to_string(), path));
        }
    }
    Ok(out)
}
