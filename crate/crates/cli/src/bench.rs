//! `stegret bench`: distortion table and query timing over a cover corpus.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use stegret::bits::bytes_to_bits;
use stegret::metrics::{format_psnr, quality, QualityReport};
use stegret::payload::{keystream, serialize_record};
use stegret::retrieval::{self, CorpusKeys, IndexManifest};
use stegret::semantics::{extract_features, record_for_class, CentroidTable};
use stegret::stego::{lsb_embed, lsbm_embed, lsbmr_embed};
use stegret::{load_image, save_image, EmbedConfig, Error, ImageRaster, Result, SemanticRecord};

use crate::{load_ontology, ConfigArgs};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Esha,
    Lsb1,
    Lsb3,
    Lsbm,
    Lsbmr,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Esha => "esha",
            Method::Lsb1 => "lsb1",
            Method::Lsb3 => "lsb3",
            Method::Lsbm => "lsbm",
            Method::Lsbmr => "lsbmr",
        }
    }
}

#[derive(Args)]
pub struct BenchCmd {
    dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "esha,lsb1,lsb3,lsbm,lsbmr")]
    methods: Vec<Method>,
    /// Payload per image in bits; a multiple of 8.
    #[arg(long, default_value_t = 8192)]
    payload_bits: usize,
    /// Run the table once per listed payload size instead of `--payload-bits`.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<usize>,
    /// Query terms used for the timing report.
    #[arg(long = "query", default_value = "sky")]
    terms: Vec<String>,
    /// Centroid file for the recompute path; trained from the corpus when absent.
    #[arg(long)]
    centroids: Option<PathBuf>,
    /// Ontology file, or `corel` for the bundled one.
    #[arg(long, default_value = "corel")]
    ontology: String,
    #[arg(long)]
    no_timing: bool,
    #[arg(long, env = "ESHA_ENC_KEY", hide_env_values = true, default_value = "bench-enc")]
    enc_key: String,
    #[arg(long, env = "ESHA_STEGO_KEY", hide_env_values = true, default_value = "bench-stego")]
    stego_key: String,
    #[command(flatten)]
    config: ConfigArgs,
}

/// Record whose serialized form is exactly `bytes` long.
fn padded_record(bytes: usize) -> Result<SemanticRecord> {
    let base = serialize_record(&SemanticRecord::new("bench"))?.len();
    if bytes < base {
        return Err(Error::InvalidConfig(format!("payload must be at least {} bits", base * 8)));
    }
    Ok(SemanticRecord::new("bench").with_description("x".repeat(bytes - base)))
}

struct Job<'a> {
    cfg: EmbedConfig,
    keys: &'a CorpusKeys,
    record: SemanticRecord,
    message: Vec<bool>,
}

fn run_method(cover: &ImageRaster, method: Method, job: &Job) -> Result<QualityReport> {
    let stego = match method {
        Method::Esha => {
            stegret::esha_embed(cover, &job.record, &job.keys.enc, &job.keys.stego, &job.cfg)?.into_raster()
        }
        Method::Lsb1 => lsb_embed(cover, &job.message, 1)?,
        Method::Lsb3 => lsb_embed(cover, &job.message, 3)?,
        Method::Lsbm => lsbm_embed(cover, &job.message, &job.keys.stego)?,
        Method::Lsbmr => lsbmr_embed(cover, &job.message, &job.keys.stego)?,
    };
    quality(cover, &stego)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n.max(1) as f64
}

fn table(manifest: &IndexManifest, root: &Path, cmd: &BenchCmd, keys: &CorpusKeys, bits: usize) -> Result<()> {
    if bits == 0 || !bits.is_multiple_of(8) {
        return Err(Error::InvalidConfig(format!("payload bits must be a positive multiple of 8, got {bits}")));
    }
    let job = Job {
        cfg: keys.cfg,
        keys,
        record: padded_record(bits / 8)?,
        message: bytes_to_bits(&keystream(&keys.enc, 0, bits / 8)),
    };
    let rows: Vec<Vec<QualityReport>> = manifest
        .entries()
        .par_iter()
        .map(|e| {
            let cover = load_image(root.join(&e.path))?;
            cmd.methods.iter().map(|&m| run_method(&cover, m, &job)).collect()
        })
        .collect::<Result<_>>()?;
    for (entry, reports) in manifest.entries().iter().zip(&rows) {
        for (m, r) in cmd.methods.iter().zip(reports) {
            println!("{},{},{},{},{:.6}", entry.path, m.name(), bits, format_psnr(r.psnr), r.ssim);
        }
    }
    for (i, m) in cmd.methods.iter().enumerate() {
        let psnr = mean(rows.iter().map(|r| r[i].psnr));
        let ssim = mean(rows.iter().map(|r| r[i].ssim));
        println!("average,{},{},{},{:.6}", m.name(), bits, format_psnr(psnr), ssim);
    }
    Ok(())
}

fn class_of(path: &str) -> &str {
    path.rsplit_once('/').map(|(dir, _)| dir.rsplit('/').next().unwrap_or(dir)).unwrap_or("corpus")
}

fn timing(manifest: &IndexManifest, root: &Path, cmd: &BenchCmd, keys: &CorpusKeys) -> Result<()> {
    let onto = load_ontology(Some(&cmd.ontology))?;
    let centroids = match &cmd.centroids {
        Some(p) => CentroidTable::load(p)?,
        None => CentroidTable::from_samples(
            manifest
                .entries()
                .par_iter()
                .map(|e| {
                    Ok((
                        class_of(&e.path).to_string(),
                        extract_features(&load_image(root.join(&e.path))?, &keys.cfg.edge_params)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?,
        )?,
    };
    let work = tempfile::tempdir().map_err(|e| Error::Io { path: std::env::temp_dir(), source: e })?;
    manifest.entries().par_iter().try_for_each(|e| -> Result<()> {
        let cover = load_image(root.join(&e.path))?;
        let record = record_for_class(class_of(&e.path), &onto);
        let stego = stegret::esha_embed(&cover, &record, &keys.enc, &keys.stego, &keys.cfg)?;
        let out = work.path().join(e.path.replace('/', "__"));
        save_image(stego.raster(), out.with_extension("png"))
    })?;
    let stego_manifest = retrieval::index_directory(work.path())?.manifest;
    let report = retrieval::timing_bench(work.path(), &stego_manifest, &cmd.terms, keys, &onto, &centroids)?;
    println!(
        "timing: images={} extraction_s={:.6} recompute_s={:.6} ratio={:.3}",
        report.images,
        report.extraction.as_secs_f64(),
        report.recompute.as_secs_f64(),
        report.ratio()
    );
    Ok(())
}

pub fn run(cmd: &BenchCmd) -> Result<()> {
    let cfg = cmd.config.config()?;
    let keys = CorpusKeys {
        enc: stegret::EncryptionKey::new(cmd.enc_key.as_bytes())?,
        stego: stegret::StegoKey::new(cmd.stego_key.as_bytes())?,
        cfg,
    };
    let scan = retrieval::scan_directory(&cmd.dir)?;
    for (path, err) in &scan.failures {
        eprintln!("skipped {path}: {err}");
    }
    let sizes = if cmd.sweep.is_empty() { vec![cmd.payload_bits] } else { cmd.sweep.clone() };
    println!("image_name,method,payload_bits,psnr_db,ssim");
    for bits in sizes {
        table(&scan.manifest, &cmd.dir, cmd, &keys, bits)?;
    }
    if !cmd.no_timing && !scan.manifest.is_empty() {
        timing(&scan.manifest, &cmd.dir, cmd, &keys)?;
    }
    Ok(())
}
