//! The feature pipeline: stratified split, vocabulary reduction (variance,
//! rarity, single-label, fuzzy merge), and sparse binarization.
//!
//! Run with: `cargo run --example prepare_features`

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trackhdr::features::{binarize, build_vocabulary, split_dataset, SplitSpec, VocabularyParams};
use trackhdr::ingest::{Dataset, Direction, HttpMessageRecord, Label, Provenance};

/// 400 labeled responses with header traffic designed to hit every filter:
/// a constant-valued header (dropped: low variance), a 2-in-400 header
/// (dropped: rare), a tracker-only header (dropped: single label), and a
/// typo'd variant of x-trace-id that should merge into it.
fn synthetic_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut labels = BTreeMap::new();
    for id in 0..400u64 {
        let tracker = rng.gen_bool(0.35);
        let mut headers: Vec<(String, String)> = vec![
            ("server".into(), "demo/1.0".into()), // never varies
            ("etag".into(), format!("\"{:x}\"", rng.gen::<u32>())),
        ];
        if rng.gen_bool(if tracker { 0.9 } else { 0.15 }) {
            headers.push(("x-sess-id".into(), format!("s{}", rng.gen_range(0..5))));
        }
        if rng.gen_bool(if tracker { 0.2 } else { 0.8 }) {
            headers.push(("cache-control".into(), format!("max-age={}", 60 * rng.gen_range(1..20))));
        }
        if tracker && rng.gen_bool(0.5) {
            headers.push(("x-beacon".into(), format!("b{}", rng.gen_range(0..4)))); // tracker-only
        }
        if id < 2 {
            headers.push(("x-rare".into(), format!("r{id}")));
        }
        // One header under two spellings; values drawn from one pool so the
        // merge's value-overlap test passes.
        let spelling = if rng.gen_bool(0.8) { "x-trace-id" } else { "x-trace-1d" };
        if rng.gen_bool(if tracker { 0.7 } else { 0.4 }) {
            headers.push((spelling.into(), format!("t{}", rng.gen_range(0..6))));
        }
        records.push(HttpMessageRecord {
            record_id: id,
            direction: Direction::Response,
            remote_hostname: format!("host{}.example", id % 50),
            url: format!("https://host{}.example/r/{id}", id % 50),
            headers,
            browser_tag: "demo".into(),
            capture_timestamp: 1_700_000_000 + id as i64,
        });
        labels.insert(id, if tracker { Label::Tracker } else { Label::NonTracker });
    }
    Dataset::new(records, Provenance::default(), Some(labels)).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = synthetic_dataset(11);
    let (t, nt) = ds.label_counts();
    println!("dataset: {} records ({t} trackers, {nt} non-trackers)", ds.records.len());

    let spec = SplitSpec { train: 0.7, calib: 0.1, test: 0.2, seed: 42, stratified: true };
    let splits = split_dataset(&ds, &spec)?;
    for (name, part) in [("train", &splits.train), ("calib", &splits.calib), ("test", &splits.test)] {
        let (t, nt) = part.label_counts();
        println!("  {name}: {} records ({t} T / {nt} NT)", part.records.len());
    }

    // min_presence_rate raised so the 2-in-400 header actually falls below
    // it; the other thresholds are the defaults.
    let params = VocabularyParams { min_presence_rate: 0.01, ..VocabularyParams::default() };
    let vocab = build_vocabulary(&splits.train, &params)?;

    println!("\nvocabulary ({} columns):", vocab.dim());
    for name in &vocab.canonical {
        println!("  column: {name}");
    }
    for (alias, canonical) in &vocab.alias_map {
        println!("  alias:  {alias} -> {canonical}");
    }
    for (name, reason) in &vocab.dropped {
        println!("  dropped {name}: {reason:?}");
    }
    println!("  digest: {}...", &vocab.digest()[..16]);

    // The vocabulary is frozen from the training split; the other splits
    // are only ever binarized through it.
    let train_m = binarize(&splits.train, &vocab)?;
    let test_m = binarize(&splits.test, &vocab)?;
    println!(
        "\nmatrices: train {}x{} (density {:.3}), test {}x{} (density {:.3})",
        train_m.n_rows, train_m.dim, train_m.density(),
        test_m.n_rows, test_m.dim, test_m.density(),
    );
    Ok(())
}
