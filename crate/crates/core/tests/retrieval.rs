use std::path::Path;

use stegret::retrieval::{
    index_directory, query, query_directory, scan_directory, timing_bench, CorpusKeys, IndexManifest, RankingPrefs,
    MANIFEST_NAME,
};
use stegret::semantics::{record_for_class, CentroidTable, Ontology};
use stegret::synth::{class_image, standard_image};
use stegret::{esha_embed, save_image, EmbedConfig, EncryptionKey, Error, SemanticRecord, StegoKey};

fn keys() -> CorpusKeys {
    CorpusKeys {
        enc: EncryptionKey::new("corpus-enc").unwrap(),
        stego: StegoKey::new("corpus-stego").unwrap(),
        cfg: EmbedConfig::default(),
    }
}

fn embed_into(dir: &Path, name: &str, seed: u64, rec: &SemanticRecord, keys: &CorpusKeys) {
    let cover = standard_image(seed, 48, 48).unwrap();
    let s = esha_embed(&cover, rec, &keys.enc, &keys.stego, &keys.cfg).unwrap();
    save_image(s.raster(), dir.join(name)).unwrap();
}

/// 4 sky, 1 beach stego images and 2 plain covers.
fn fixture(dir: &Path, keys: &CorpusKeys) {
    let onto = Ontology::bundled_corel();
    for i in 0..4 {
        embed_into(dir, &format!("sky_{i}.png"), i, &record_for_class("sky", &onto), keys);
    }
    std::fs::create_dir(dir.join("sub")).unwrap();
    embed_into(dir, "sub/beach.bmp", 9, &record_for_class("beach", &onto), keys);
    save_image(&standard_image(20, 32, 32).unwrap(), dir.join("plain_a.png")).unwrap();
    save_image(&standard_image(21, 32, 32).unwrap(), dir.join("sub/plain_b.bmp")).unwrap();
}

#[test]
fn empty_directory_gives_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let report = index_directory(dir.path()).unwrap();
    assert!(report.manifest.is_empty());
    assert_eq!(std::fs::read_to_string(dir.path().join(MANIFEST_NAME)).unwrap(), "stegret-index 1\n");
    let outcome =
        query_directory(dir.path(), &["sky"], &keys(), &Ontology::default(), &RankingPrefs::default()).unwrap();
    assert!(outcome.results.is_empty());
}

#[test]
fn index_counts_payloads_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    fixture(dir.path(), &keys());
    std::fs::write(dir.path().join("broken.png"), b"not a png").unwrap();
    std::fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();

    let report = index_directory(dir.path()).unwrap();
    assert_eq!(report.manifest.len(), 7);
    assert_eq!(report.manifest.with_payload().count(), 5);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].0, "broken.png");
    let paths: Vec<_> = report.manifest.entries().iter().map(|e| e.path.as_str()).collect();
    assert!(paths.windows(2).all(|w| w[0] < w[1]));
    assert!(paths.contains(&"sub/beach.bmp"));

    let first = std::fs::read(dir.path().join(MANIFEST_NAME)).unwrap();
    index_directory(dir.path()).unwrap();
    assert_eq!(std::fs::read(dir.path().join(MANIFEST_NAME)).unwrap(), first);
    assert_eq!(IndexManifest::load(dir.path()).unwrap(), report.manifest);
}

#[test]
fn sky_query_ranks_sky_images_high() {
    let dir = tempfile::tempdir().unwrap();
    let k = keys();
    fixture(dir.path(), &k);
    let manifest = index_directory(dir.path()).unwrap().manifest;
    let onto = Ontology::bundled_corel();
    let outcome = query(dir.path(), &manifest, &["sky"], &k, &onto, &RankingPrefs::default()).unwrap();
    let high: Vec<_> = outcome.results.high.iter().map(|h| h.path.as_str()).collect();
    assert_eq!(high, ["sky_0.png", "sky_1.png", "sky_2.png", "sky_3.png"]);
    assert!(outcome.results.high.iter().all(|h| h.score == 1.0 && h.record.class_label == "sky"));
    assert!(outcome.results.medium.is_empty());
    // beach shares only the grandparent chain, which is not expanded
    assert!(outcome.results.low.is_empty());
    assert!(outcome.skipped.is_empty());

    let again = query(dir.path(), &manifest, &["sky"], &k, &onto, &RankingPrefs::default()).unwrap();
    assert_eq!(again.results, outcome.results);

    let none = query(dir.path(), &manifest, &["submarine"], &k, &onto, &RankingPrefs::default()).unwrap();
    assert!(none.results.is_empty());
    assert!(matches!(
        query(dir.path(), &manifest, &["  "], &k, &onto, &RankingPrefs::default()),
        Err(Error::EmptyQuery)
    ));
}

#[test]
fn wrong_stego_key_skips_everything() {
    let dir = tempfile::tempdir().unwrap();
    let k = keys();
    fixture(dir.path(), &k);
    let wrong = CorpusKeys { stego: StegoKey::new("other").unwrap(), ..k };
    let outcome =
        query_directory(dir.path(), &["sky"], &wrong, &Ontology::bundled_corel(), &RankingPrefs::default()).unwrap();
    assert!(outcome.results.is_empty());
    assert_eq!(outcome.skipped.len(), 5);
    assert!(outcome.skipped.iter().all(|s| matches!(s.error, Error::IntegrityFailure)));
}

#[test]
fn timing_bench_single_image() {
    let dir = tempfile::tempdir().unwrap();
    let k = keys();
    let onto = Ontology::bundled_corel();
    let cover = class_image("horses", 1, 64, 64).unwrap();
    let s = esha_embed(&cover, &record_for_class("horses", &onto), &k.enc, &k.stego, &k.cfg).unwrap();
    save_image(s.raster(), dir.path().join("h.png")).unwrap();
    let manifest = scan_directory(dir.path()).unwrap().manifest;
    let fv = stegret::semantics::extract_features(&cover, &k.cfg.edge_params).unwrap();
    let centroids = CentroidTable::from_samples([("horses".to_string(), fv)]).unwrap();
    let report = timing_bench(dir.path(), &manifest, &["horses"], &k, &onto, &centroids).unwrap();
    assert_eq!(report.images, 1);
    assert!(report.extraction.as_nanos() > 0 && report.recompute.as_nanos() > 0);
    assert!(report.ratio().is_finite() && report.ratio() > 0.0);
}
