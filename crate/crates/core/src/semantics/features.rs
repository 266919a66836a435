//! Low-level features (HSV histogram + edge density) and a nearest-centroid
//! annotator mapping them onto ontology concepts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::edges::{hybrid_edges, EdgeParams};
use crate::error::{Error, Result};
use crate::imaging::{load_image, ImageRaster};
use crate::payload::SemanticRecord;
use crate::semantics::Ontology;

pub const HUE_BINS: usize = 8;
pub const SAT_BINS: usize = 3;
pub const VAL_BINS: usize = 3;
pub const HISTOGRAM_LEN: usize = HUE_BINS * SAT_BINS * VAL_BINS;
pub const FEATURE_LEN: usize = HISTOGRAM_LEN + 1;

const CENTROID_MAGIC: &str = "stegret-centroids 1";

/// 72 L1-normalized HSV bins followed by the hybrid edge density.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub [f64; FEATURE_LEN]);

impl FeatureVector {
    pub fn histogram(&self) -> &[f64] {
        &self.0[..HISTOGRAM_LEN]
    }

    pub fn edge_density(&self) -> f64 {
        self.0[HISTOGRAM_LEN]
    }

    pub fn distance(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

/// Hexcone RGB to HSV: hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv([r, g, b]: [u8; 3]) -> (f64, f64, f64) {
    let max = r.max(g).max(b) as f64;
    let min = r.min(g).min(b) as f64;
    let delta = max - min;
    let v = max / 255.0;
    let s = if max == 0.0 { 0.0 } else { delta / max };
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h, s, v)
}

pub fn hsv_bin(hsv: (f64, f64, f64)) -> usize {
    let (h, s, v) = hsv;
    let hb = ((h / 45.0) as usize).min(HUE_BINS - 1);
    let sb = ((s * SAT_BINS as f64) as usize).min(SAT_BINS - 1);
    let vb = ((v * VAL_BINS as f64) as usize).min(VAL_BINS - 1);
    hb * SAT_BINS * VAL_BINS + sb * VAL_BINS + vb
}

pub fn extract_features(raster: &ImageRaster, edge_params: &EdgeParams) -> Result<FeatureVector> {
    let edges = hybrid_edges(raster, edge_params)?;
    let mut counts = [0u64; HISTOGRAM_LEN];
    for p in raster.samples().chunks_exact(3) {
        counts[hsv_bin(rgb_to_hsv([p[0], p[1], p[2]]))] += 1;
    }
    let n = raster.pixel_count() as f64;
    let mut v = [0.0; FEATURE_LEN];
    for (slot, c) in v.iter_mut().zip(counts) {
        *slot = c as f64 / n;
    }
    v[HISTOGRAM_LEN] = edges.density();
    Ok(FeatureVector(v))
}

/// Per-class mean feature vectors, ordered by class name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CentroidTable {
    centroids: BTreeMap<String, FeatureVector>,
}

impl CentroidTable {
    /// Average the feature vectors of each class.
    pub fn from_samples<I>(samples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, FeatureVector)>,
    {
        let mut sums: BTreeMap<String, ([f64; FEATURE_LEN], usize)> = BTreeMap::new();
        for (class, fv) in samples {
            let entry = sums.entry(class).or_insert(([0.0; FEATURE_LEN], 0));
            entry.0.iter_mut().zip(&fv.0).for_each(|(acc, x)| *acc += x);
            entry.1 += 1;
        }
        if sums.is_empty() {
            return Err(Error::NoCentroids);
        }
        let centroids =
            sums.into_iter().map(|(class, (sum, n))| (class, FeatureVector(sum.map(|s| s / n as f64)))).collect();
        Ok(Self { centroids })
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn get(&self, class: &str) -> Option<&FeatureVector> {
        self.centroids.get(class)
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.centroids.keys().map(String::as_str)
    }

    /// Nearest class; equal distances resolve to the lexicographically first name.
    pub fn classify(&self, fv: &FeatureVector) -> Result<&str> {
        let mut best: Option<(&str, f64)> = None;
        for (class, c) in &self.centroids {
            let d = fv.distance(c);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((class, d));
            }
        }
        best.map(|(c, _)| c).ok_or(Error::NoCentroids)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(CENTROID_MAGIC);
        out.push('\n');
        for (class, fv) in &self.centroids {
            out.push_str(class);
            for v in fv.0 {
                write!(out, "\t{v:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim_end() == CENTROID_MAGIC => {}
            _ => return Err(Error::Parse { line: 1, reason: format!("expected '{CENTROID_MAGIC}'") }),
        }
        let mut centroids = BTreeMap::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::Parse { line: i + 1, reason: reason.to_string() };
            let mut parts = line.split('\t');
            let class = parts.next().filter(|c| !c.is_empty()).ok_or_else(|| bad("missing class"))?;
            let values: Vec<f64> =
                parts.map(|p| p.parse::<f64>().map_err(|_| bad("bad number"))).collect::<Result<_>>()?;
            let arr: [f64; FEATURE_LEN] = values.try_into().map_err(|_| bad("expected 73 feature values"))?;
            centroids.insert(class.to_string(), FeatureVector(arr));
        }
        if centroids.is_empty() {
            return Err(Error::NoCentroids);
        }
        Ok(Self { centroids })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

pub(crate) fn is_raster_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "bmp"))
        .unwrap_or(false)
}

fn sorted_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        out.push(entry.map_err(|e| Error::io(dir, e))?.path());
    }
    out.sort();
    Ok(out)
}

/// Train from a `class_name/image.png` directory layout.
pub fn train_centroids(dir: impl AsRef<Path>, edge_params: &EdgeParams) -> Result<CentroidTable> {
    let dir = dir.as_ref();
    let mut jobs = Vec::new();
    for class_dir in sorted_entries(dir)?.into_iter().filter(|p| p.is_dir()) {
        let class = class_dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::InvalidRecord(format!("non UTF-8 class directory {}", class_dir.display())))?
            .to_string();
        let images: Vec<_> =
            sorted_entries(&class_dir)?.into_iter().filter(|p| p.is_file() && is_raster_file(p)).collect();
        if images.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        jobs.extend(images.into_iter().map(|p| (class.clone(), p)));
    }
    let samples = jobs
        .par_iter()
        .map(|(class, path)| Ok((class.clone(), extract_features(&load_image(path)?, edge_params)?)))
        .collect::<Result<Vec<_>>>()?;
    CentroidTable::from_samples(samples)
}

/// Classify `raster` and describe it with the class's synonyms and parent concept.
pub fn annotate_image(
    raster: &ImageRaster,
    centroids: &CentroidTable,
    onto: &Ontology,
    edge_params: &EdgeParams,
) -> Result<SemanticRecord> {
    if centroids.is_empty() {
        return Err(Error::NoCentroids);
    }
    let fv = extract_features(raster, edge_params)?;
    let class = centroids.classify(&fv)?;
    Ok(record_for_class(class, onto))
}

/// Record with `class` as label and its ontology keywords.
pub fn record_for_class(class: &str, onto: &Ontology) -> SemanticRecord {
    SemanticRecord::new(class).with_keywords(onto.keywords_for(class))
}
