//! Stego-corpus indexing, keyed extraction-based querying and tiered ranking.
//!
//! The index only caches non-secret facts (dimensions and whether an ESH1
//! header is present). Semantics stay inside the images and are recovered per
//! query with the caller's keys.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::warn;
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::imaging::load_image;
use crate::payload::{EncryptionKey, SemanticRecord, StegoKey};
use crate::semantics::{
    expand_query, extract_features, is_raster_file, record_for_class, CentroidTable, ExpandedQuery, Ontology,
};
use crate::stego::{esha_extract, probe_header, EmbedConfig};

pub const MANIFEST_NAME: &str = "stegret-index.v1";
const MANIFEST_MAGIC: &str = "stegret-index 1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    /// Path relative to the corpus root, `/`-separated.
    pub path: String,
    pub width: usize,
    pub height: usize,
    pub payload_present: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexManifest {
    entries: Vec<IndexEntry>,
}

impl IndexManifest {
    pub fn new(mut entries: Vec<IndexEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        if let Some(w) = entries.windows(2).find(|w| w[0].path == w[1].path) {
            return Err(Error::MalformedFile(format!("duplicate index entry '{}'", w[0].path)));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn with_payload(&self) -> impl Iterator<Item = &IndexEntry> {
        self.entries.iter().filter(|e| e.payload_present)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MANIFEST_MAGIC}\n");
        for e in &self.entries {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", e.path, e.width, e.height, e.payload_present as u8));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l == MANIFEST_MAGIC => {}
            _ => return Err(Error::Parse { line: 1, reason: format!("expected '{MANIFEST_MAGIC}'") }),
        }
        let mut entries = Vec::new();
        for (i, line) in lines {
            let bad = || Error::Parse { line: i + 1, reason: "expected path, width, height, 0/1".into() };
            let cols: Vec<&str> = line.split('\t').collect();
            let [path, w, h, p] = cols[..] else { return Err(bad()) };
            entries.push(IndexEntry {
                path: path.to_string(),
                width: w.parse().map_err(|_| bad())?,
                height: h.parse().map_err(|_| bad())?,
                payload_present: match p {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad()),
                },
            });
        }
        Self::new(entries)
    }

    pub fn load(root: impl AsRef<Path>) -> Result<Self> {
        let path = root.as_ref().join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }

    /// The manifest stored under `root`, or a fresh in-memory scan when there is none.
    pub fn load_or_scan(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        if root.join(MANIFEST_NAME).is_file() {
            Self::load(root)
        } else {
            Ok(scan_directory(root)?.manifest)
        }
    }
}

/// Files that could not be indexed, with the reason.
#[derive(Debug)]
pub struct IndexReport {
    pub manifest: IndexManifest,
    pub failures: Vec<(String, Error)>,
}

fn relative_path(root: &Path, path: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Probe every PNG/BMP under `root` for an ESH1 header without writing anything.
pub fn scan_directory(root: impl AsRef<Path>) -> Result<IndexReport> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::io(root, std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory")));
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if entry.file_type().is_file() && is_raster_file(entry.path()) {
            files.push(entry.into_path());
        }
    }
    let probed: Vec<(String, Result<IndexEntry>)> = files
        .par_iter()
        .map(|p| {
            let rel = relative_path(root, p);
            let entry = load_image(p).map(|r| IndexEntry {
                path: rel.clone(),
                width: r.width(),
                height: r.height(),
                payload_present: probe_header(&r).is_ok(),
            });
            (rel, entry)
        })
        .collect();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (rel, res) in probed {
        match res {
            Ok(e) => entries.push(e),
            Err(err) => {
                warn!("skipping {rel}: {err}");
                failures.push((rel, err));
            }
        }
    }
    Ok(IndexReport { manifest: IndexManifest::new(entries)?, failures })
}

/// Scan `root` and write its manifest file there.
pub fn index_directory(root: impl AsRef<Path>) -> Result<IndexReport> {
    let root = root.as_ref();
    let report = scan_directory(root)?;
    let path = root.join(MANIFEST_NAME);
    std::fs::write(&path, report.manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// Record terms: class, keywords and whitespace-split description, lowercased.
pub fn record_terms(record: &SemanticRecord) -> std::collections::BTreeSet<String> {
    std::iter::once(record.class_label.as_str())
        .chain(record.keywords.iter().map(String::as_str))
        .map(str::to_lowercase)
        .chain(record.description.split_whitespace().map(str::to_lowercase))
        .collect()
}

/// Matched query weight over total query weight.
pub fn score(record: &SemanticRecord, q: &ExpandedQuery) -> f64 {
    let total = q.total_weight();
    if total <= 0.0 {
        return 0.0;
    }
    let terms = record_terms(record);
    let matched: f64 = q.terms().filter(|(t, _)| terms.contains(*t)).map(|(_, w)| w).sum();
    matched / total
}

/// User preferences for tiering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingPrefs {
    pub high: f64,
    pub medium: f64,
    pub min_score: f64,
    /// Keep at most this many results per tier.
    pub max_per_tier: Option<usize>,
}

impl Default for RankingPrefs {
    fn default() -> Self {
        Self { high: 0.75, medium: 0.40, min_score: 0.05, max_per_tier: None }
    }
}

impl RankingPrefs {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.min_score && self.min_score < self.medium && self.medium < self.high && self.high <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= min_score < medium < high <= 1, got {} / {} / {}",
                self.min_score, self.medium, self.high
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    High,
    Medium,
    Low,
}

impl Tier {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::High => "high",
            Tier::Medium => "medium",
            Tier::Low => "low",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedHit {
    pub path: String,
    pub score: f64,
    pub record: SemanticRecord,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedResults {
    pub high: Vec<RankedHit>,
    pub medium: Vec<RankedHit>,
    pub low: Vec<RankedHit>,
}

impl RankedResults {
    pub fn is_empty(&self) -> bool {
        self.high.is_empty() && self.medium.is_empty() && self.low.is_empty()
    }

    pub fn len(&self) -> usize {
        self.high.len() + self.medium.len() + self.low.len()
    }

    pub fn tier(&self, tier: Tier) -> &[RankedHit] {
        match tier {
            Tier::High => &self.high,
            Tier::Medium => &self.medium,
            Tier::Low => &self.low,
        }
    }

    /// All hits, high tier first.
    pub fn iter(&self) -> impl Iterator<Item = (Tier, &RankedHit)> {
        [Tier::High, Tier::Medium, Tier::Low].into_iter().flat_map(move |t| self.tier(t).iter().map(move |h| (t, h)))
    }
}

/// Drop hits under `min_score`, partition by thresholds, sort by score then path.
pub fn rank(mut hits: Vec<RankedHit>, prefs: &RankingPrefs) -> RankedResults {
    hits.retain(|h| h.score >= prefs.min_score);
    hits.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.path.cmp(&b.path)));
    let mut out = RankedResults::default();
    for h in hits {
        let tier = if h.score >= prefs.high {
            &mut out.high
        } else if h.score >= prefs.medium {
            &mut out.medium
        } else {
            &mut out.low
        };
        if prefs.max_per_tier.is_none_or(|cap| tier.len() < cap) {
            tier.push(h);
        }
    }
    out
}

#[derive(Debug)]
pub struct SkippedEntry {
    pub path: String,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct QueryOutcome {
    pub results: RankedResults,
    pub skipped: Vec<SkippedEntry>,
}

/// Keys and embedding parameters needed to open a corpus.
#[derive(Debug, Clone)]
pub struct CorpusKeys {
    pub enc: EncryptionKey,
    pub stego: StegoKey,
    pub cfg: EmbedConfig,
}

fn extract_entry(root: &Path, entry: &IndexEntry, keys: &CorpusKeys) -> Result<SemanticRecord> {
    let raster = load_image(root.join(&entry.path))?;
    esha_extract(&raster, &keys.enc, &keys.stego, &keys.cfg)
}

fn collect_hits(
    root: &Path,
    manifest: &IndexManifest,
    q: &ExpandedQuery,
    keys: &CorpusKeys,
    parallel: bool,
) -> (Vec<RankedHit>, Vec<SkippedEntry>) {
    let run = |e: &IndexEntry| match extract_entry(root, e, keys) {
        Ok(record) => Ok(RankedHit { path: e.path.clone(), score: score(&record, q), record }),
        Err(error) => Err(SkippedEntry { path: e.path.clone(), error }),
    };
    let entries: Vec<&IndexEntry> = manifest.with_payload().collect();
    let results: Vec<_> =
        if parallel { entries.par_iter().map(|e| run(e)).collect() } else { entries.iter().map(|e| run(e)).collect() };
    let mut hits = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(h) => hits.push(h),
            Err(s) => {
                warn!("skipping {}: {}", s.path, s.error);
                skipped.push(s);
            }
        }
    }
    (hits, skipped)
}

/// Extract, score and rank every payload-bearing image listed in `manifest`.
/// Images that fail extraction are skipped and reported, not fatal.
pub fn query<S: AsRef<str>>(
    root: impl AsRef<Path>,
    manifest: &IndexManifest,
    terms: &[S],
    keys: &CorpusKeys,
    onto: &Ontology,
    prefs: &RankingPrefs,
) -> Result<QueryOutcome> {
    prefs.validate()?;
    keys.cfg.validate()?;
    let q = expand_query(terms, onto)?;
    let (hits, skipped) = collect_hits(root.as_ref(), manifest, &q, keys, true);
    Ok(QueryOutcome { results: rank(hits, prefs), skipped })
}

/// [`query`] against the manifest in `root`, scanning if none was written.
pub fn query_directory<S: AsRef<str>>(
    root: impl AsRef<Path>,
    terms: &[S],
    keys: &CorpusKeys,
    onto: &Ontology,
    prefs: &RankingPrefs,
) -> Result<QueryOutcome> {
    let root = root.as_ref();
    let manifest = IndexManifest::load_or_scan(root)?;
    query(root, &manifest, terms, keys, onto, prefs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub images: usize,
    /// Load + keyed extraction + scoring.
    pub extraction: Duration,
    /// Load + feature extraction + classification + scoring.
    pub recompute: Duration,
}

impl TimingReport {
    /// recompute / extraction; above 1 means the embedded-semantics path is faster.
    pub fn ratio(&self) -> f64 {
        self.recompute.as_secs_f64() / self.extraction.as_secs_f64().max(1e-12)
    }
}

/// Time one query through embedded semantics against recomputing features for
/// every image. Both paths run single-threaded over the same images.
pub fn timing_bench<S: AsRef<str>>(
    root: impl AsRef<Path>,
    manifest: &IndexManifest,
    terms: &[S],
    keys: &CorpusKeys,
    onto: &Ontology,
    centroids: &CentroidTable,
) -> Result<TimingReport> {
    let root = root.as_ref();
    let q = expand_query(terms, onto)?;
    let entries: Vec<&IndexEntry> = manifest.with_payload().collect();

    let start = Instant::now();
    let (hits, _) = collect_hits(root, manifest, &q, keys, false);
    std::hint::black_box(&hits);
    let extraction = start.elapsed();

    let start = Instant::now();
    let mut scores = Vec::with_capacity(entries.len());
    for e in &entries {
        let raster = load_image(root.join(&e.path))?;
        let fv = extract_features(&raster, &keys.cfg.edge_params)?;
        let record = record_for_class(centroids.classify(&fv)?, onto);
        scores.push(score(&record, &q));
    }
    std::hint::black_box(&scores);
    let recompute = start.elapsed();

    Ok(TimingReport { images: entries.len(), extraction, recompute })
}

/// Absolute path of a manifest entry.
pub fn entry_path(root: impl AsRef<Path>, entry: &IndexEntry) -> PathBuf {
    root.as_ref().join(&entry.path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::expand_query;

    fn hit(path: &str, score: f64) -> RankedHit {
        RankedHit { path: path.into(), score, record: SemanticRecord::new("x") }
    }

    #[test]
    fn score_examples() {
        let onto = Ontology::parse("concept: sky\nparent: nature\n\nconcept: nature\n").unwrap();
        let q = expand_query(&["sky"], &onto).unwrap();
        assert_eq!(q.weight("nature"), Some(0.5));
        let only_sky = SemanticRecord::new("sky");
        assert!((score(&only_sky, &q) - 1.0 / 1.5).abs() < 1e-12);
        let full = SemanticRecord::new("sky").with_keywords(["nature"]);
        assert_eq!(score(&full, &q), 1.0);
        let none = SemanticRecord::new("bus").with_description("red vehicle");
        assert_eq!(score(&none, &q), 0.0);
        let via_description = SemanticRecord::new("x").with_description("Blue SKY over NATURE");
        assert_eq!(score(&via_description, &q), 1.0);
    }

    #[test]
    fn tiers_and_ordering() {
        let hits = vec![
            hit("b.png", 0.8),
            hit("a.png", 0.8),
            hit("c.png", 0.75),
            hit("d.png", 0.5),
            hit("e.png", 0.40),
            hit("f.png", 0.39),
            hit("g.png", 0.05),
            hit("h.png", 0.049),
            hit("i.png", 1.0),
        ];
        let r = rank(hits, &RankingPrefs::default());
        fn paths(v: &[RankedHit]) -> Vec<&str> {
            v.iter().map(|h| h.path.as_str()).collect()
        }
        assert_eq!(paths(&r.high), ["i.png", "a.png", "b.png", "c.png"]);
        assert_eq!(paths(&r.medium), ["d.png", "e.png"]);
        assert_eq!(paths(&r.low), ["f.png", "g.png"]);
    }

    #[test]
    fn tier_caps() {
        let hits = (0..5).map(|i| hit(&format!("{i}.png"), 0.9)).collect();
        let prefs = RankingPrefs { max_per_tier: Some(2), ..Default::default() };
        assert_eq!(rank(hits, &prefs).high.len(), 2);
    }

    #[test]
    fn prefs_validation() {
        assert!(RankingPrefs::default().validate().is_ok());
        assert!(RankingPrefs { medium: 0.8, ..Default::default() }.validate().is_err());
        assert!(RankingPrefs { min_score: -0.1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn manifest_text_round_trip() {
        let m = IndexManifest::new(vec![
            IndexEntry { path: "z/b.png".into(), width: 4, height: 5, payload_present: true },
            IndexEntry { path: "a.bmp".into(), width: 7, height: 2, payload_present: false },
        ])
        .unwrap();
        let text = m.to_text();
        assert_eq!(text, "stegret-index 1\na.bmp\t7\t2\t0\nz/b.png\t4\t5\t1\n");
        assert_eq!(IndexManifest::parse(&text).unwrap(), m);
        assert!(IndexManifest::parse("stegret-index 2\n").is_err());
        assert!(IndexManifest::parse("stegret-index 1\na\t1\t2\n").is_err());
        let dup = IndexEntry { path: "a".into(), width: 1, height: 1, payload_present: false };
        assert!(IndexManifest::new(vec![dup.clone(), dup]).is_err());
    }
}
