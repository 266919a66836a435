//! `stegret` command-line tool.

mod bench;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stegret::edges::EdgeParams;
use stegret::retrieval::{self, CorpusKeys, RankingPrefs};
use stegret::semantics::{annotate_image, train_centroids, CentroidTable, Ontology};
use stegret::{load_image, save_image, EmbedConfig, EncryptionKey, Error, SemanticRecord, StegoKey};

#[derive(Parser)]
#[command(name = "stegret", version, about = "Hide encrypted semantics in images and query stego corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a semantic record into a lossless image.
    Embed(EmbedCmd),
    /// Recover the record embedded in an image.
    Extract(ExtractCmd),
    /// Write the corpus manifest for a directory.
    Index { dir: PathBuf },
    /// Rank the images of a stego corpus against keywords.
    Query(QueryCmd),
    /// PSNR/SSIM table for ESHA and the LSB baselines, plus a query timing report.
    Bench(bench::BenchCmd),
    /// Validate an ontology file.
    OntologyCheck { file: PathBuf },
    /// Train class centroids from a `class/image.png` directory tree.
    AnnotateTrain {
        dir: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        edges: EdgeArgs,
    },
}

#[derive(Args, Clone)]
struct KeyArgs {
    #[arg(long, env = "ESHA_ENC_KEY", hide_env_values = true)]
    enc_key: String,
    #[arg(long, env = "ESHA_STEGO_KEY", hide_env_values = true)]
    stego_key: String,
}

impl KeyArgs {
    fn keys(&self) -> stegret::Result<(EncryptionKey, StegoKey)> {
        Ok((EncryptionKey::new(self.enc_key.as_bytes())?, StegoKey::new(self.stego_key.as_bytes())?))
    }
}

/// Edge detector overrides.
#[derive(Args, Clone, Default)]
struct EdgeArgs {
    #[arg(long)]
    laplacian_threshold: Option<f64>,
    #[arg(long)]
    log_sigma: Option<f64>,
    #[arg(long)]
    log_threshold: Option<f64>,
    #[arg(long)]
    fuzzy_low: Option<f64>,
    #[arg(long)]
    fuzzy_high: Option<f64>,
}

impl EdgeArgs {
    fn apply(&self, p: &mut EdgeParams) {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut p.laplacian_threshold, self.laplacian_threshold);
        set(&mut p.log_sigma, self.log_sigma);
        set(&mut p.log_threshold, self.log_threshold);
        set(&mut p.fuzzy_low, self.fuzzy_low);
        set(&mut p.fuzzy_high, self.fuzzy_high);
    }

    fn params(&self) -> stegret::Result<EdgeParams> {
        let mut p = EdgeParams::default();
        self.apply(&mut p);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Clone)]
struct ConfigArgs {
    #[arg(long, default_value_t = 1)]
    k_smooth: u8,
    #[arg(long, default_value_t = 3)]
    k_edge: u8,
    #[command(flatten)]
    edges: EdgeArgs,
}

impl ConfigArgs {
    fn config(&self) -> stegret::Result<EmbedConfig> {
        let mut cfg = EmbedConfig::new(self.k_smooth, self.k_edge);
        self.edges.apply(&mut cfg.edge_params);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct EmbedCmd {
    input: PathBuf,
    output: PathBuf,
    #[arg(long, required_unless_present = "auto_annotate", conflicts_with = "auto_annotate")]
    class: Option<String>,
    #[arg(long = "keyword")]
    keywords: Vec<String>,
    #[arg(long, default_value = "")]
    description: String,
    /// Extra attribute as key=value; repeatable.
    #[arg(long = "attr", value_parser = parse_attr)]
    attrs: Vec<(String, String)>,
    /// Classify the image with `--centroids` and embed the resulting record.
    #[arg(long, requires = "centroids")]
    auto_annotate: bool,
    #[arg(long)]
    centroids: Option<PathBuf>,
    /// Ontology file, or `corel` for the bundled one.
    #[arg(long)]
    ontology: Option<String>,
    #[command(flatten)]
    keys: KeyArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ExtractCmd {
    input: PathBuf,
    #[command(flatten)]
    keys: KeyArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct QueryCmd {
    dir: PathBuf,
    #[arg(required = true)]
    terms: Vec<String>,
    /// Ontology file, or `corel` for the bundled one. Without it terms are matched verbatim.
    #[arg(long)]
    ontology: Option<String>,
    #[arg(long)]
    high: Option<f64>,
    #[arg(long)]
    medium: Option<f64>,
    #[arg(long)]
    min_score: Option<f64>,
    #[arg(long)]
    max_per_tier: Option<usize>,
    #[command(flatten)]
    keys: KeyArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

fn parse_attr(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    Ok((k.to_string(), v.to_string()))
}

fn load_ontology(spec: Option<&str>) -> stegret::Result<Ontology> {
    match spec {
        None => Ok(Ontology::default()),
        Some("corel") => Ok(Ontology::bundled_corel()),
        Some(path) => Ontology::load(path),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::ImageTooSmall { .. }
        | Error::UnsupportedFormat(_)
        | Error::MalformedFile(_)
        | Error::DimensionMismatch(..)
        | Error::Parse { .. }
        | Error::CycleDetected { .. }
        | Error::DuplicateSynonym { .. } => 3,
        Error::CapacityExceeded { .. } => 4,
        Error::IntegrityFailure | Error::HeaderCorrupt => 5,
        Error::NoPayload => 6,
        Error::Io { .. } => 7,
        _ => 2,
    }
}

fn embed(cmd: &EmbedCmd) -> stegret::Result<()> {
    let cfg = cmd.config.config()?;
    let (ek, sk) = cmd.keys.keys()?;
    let cover = load_image(&cmd.input)?;
    let mut record = match (&cmd.class, &cmd.centroids) {
        (Some(class), _) => SemanticRecord::new(class.as_str()),
        (None, Some(path)) => {
            let onto = load_ontology(Some(cmd.ontology.as_deref().unwrap_or("corel")))?;
            annotate_image(&cover, &CentroidTable::load(path)?, &onto, &cfg.edge_params)?
        }
        (None, None) => unreachable!("clap requires --class or --auto-annotate"),
    };
    record.keywords.extend(cmd.keywords.iter().cloned());
    if !cmd.description.is_empty() {
        record.description = cmd.description.clone();
    }
    for (k, v) in &cmd.attrs {
        record.attributes.push((k.clone(), v.clone()));
    }
    let stego = stegret::esha_embed(&cover, &record, &ek, &sk, &cfg)?;
    save_image(stego.raster(), &cmd.output)?;
    println!(
        "embedded class '{}': {} of {} payload bits used",
        record.class_label,
        stego.payload_bits(),
        stego.capacity_bits()
    );
    Ok(())
}

fn extract(cmd: &ExtractCmd) -> stegret::Result<()> {
    let cfg = cmd.config.config()?;
    let (ek, sk) = cmd.keys.keys()?;
    let record = stegret::esha_extract(&load_image(&cmd.input)?, &ek, &sk, &cfg)?;
    println!("class={}", record.class_label);
    println!("keywords={}", record.keywords.join(","));
    println!("description={}", record.description);
    for (k, v) in &record.attributes {
        println!("attr.{k}={v}");
    }
    Ok(())
}

fn index(dir: &Path) -> stegret::Result<()> {
    let report = retrieval::index_directory(dir)?;
    for (path, err) in &report.failures {
        eprintln!("skipped {path}: {err}");
    }
    let m = &report.manifest;
    println!("indexed {} images, {} with payload", m.len(), m.with_payload().count());
    Ok(())
}

fn query(cmd: &QueryCmd) -> stegret::Result<()> {
    let cfg = cmd.config.config()?;
    let (enc, stego) = cmd.keys.keys()?;
    let onto = load_ontology(cmd.ontology.as_deref())?;
    let defaults = RankingPrefs::default();
    let prefs = RankingPrefs {
        high: cmd.high.unwrap_or(defaults.high),
        medium: cmd.medium.unwrap_or(defaults.medium),
        min_score: cmd.min_score.unwrap_or(defaults.min_score),
        max_per_tier: cmd.max_per_tier,
    };
    let keys = CorpusKeys { enc, stego, cfg };
    let outcome = retrieval::query_directory(&cmd.dir, &cmd.terms, &keys, &onto, &prefs)?;
    if outcome.results.is_empty() {
        println!("no results");
    }
    for (tier, hit) in outcome.results.iter() {
        println!("{}\t{:.4}\t{}\t{}", tier.as_str(), hit.score, hit.path, hit.record.class_label);
    }
    if !outcome.skipped.is_empty() {
        eprintln!("skipped {} image(s) that failed extraction", outcome.skipped.len());
    }
    Ok(())
}

fn ontology_check(file: &Path) -> stegret::Result<()> {
    let onto = Ontology::load(file)?;
    let roots = onto.concepts().filter(|c| onto.parent(c).is_none()).count();
    println!("ok: {} concepts, {} roots", onto.len(), roots);
    Ok(())
}

fn annotate_train(dir: &Path, output: &Path, edges: &EdgeArgs) -> stegret::Result<()> {
    let table = train_centroids(dir, &edges.params()?)?;
    table.save(output)?;
    println!("trained {} class centroids", table.len());
    Ok(())
}

fn run(cli: &Cli) -> stegret::Result<()> {
    match &cli.command {
        Command::Embed(cmd) => embed(cmd),
        Command::Extract(cmd) => extract(cmd),
        Command::Index { dir } => index(dir),
        Command::Query(cmd) => query(cmd),
        Command::Bench(cmd) => bench::run(cmd),
        Command::OntologyCheck { file } => ontology_check(file),
        Command::AnnotateTrain { dir, output, edges } => annotate_train(dir, output, edges),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
