//! Train every classifier family on one feature matrix and compare them on
//! a held-out test split.
//!
//! Run with: `cargo run --example train_models --release`

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trackhdr::eval::report::render_metrics_table;
use trackhdr::eval::compute_metrics;
use trackhdr::features::{binarize, build_vocabulary, split_dataset, SplitSpec, VocabularyParams};
use trackhdr::ingest::{Dataset, Direction, HttpMessageRecord, Label, Provenance};
use trackhdr::models::{train_classifier, Classifier, ModelKind};

/// Header presence probabilities conditioned on the label. A handful of
/// headers carry signal; the rest are noise common to both classes.
const SIGNAL: &[(&str, f64, f64)] = &[
    // (name, P(present | tracker), P(present | non-tracker))
    ("x-sync-id", 0.85, 0.05),
    ("p3p-policy", 0.60, 0.04),
    ("set-cookie", 0.90, 0.45),
    ("cache-control", 0.35, 0.88),
    ("etag", 0.25, 0.75),
    ("x-frame-options", 0.15, 0.55),
];
const NOISE: &[&str] = &["date", "vary", "server-timing", "x-req-id", "alt-svc", "via"];

fn synthetic_dataset(n: usize, tracker_rate: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    let mut labels = BTreeMap::new();
    for id in 0..n as u64 {
        let tracker = rng.gen_bool(tracker_rate);
        let mut headers: Vec<(String, String)> = Vec::new();
        for &(name, p_t, p_nt) in SIGNAL {
            if rng.gen_bool(if tracker { p_t } else { p_nt }) {
                headers.push((name.into(), format!("v{}", rng.gen_range(0..4))));
            }
        }
        for &name in NOISE {
            if rng.gen_bool(0.5) {
                headers.push((name.into(), format!("n{}", rng.gen_range(0..4))));
            }
        }
        records.push(HttpMessageRecord {
            record_id: id,
            direction: Direction::Response,
            remote_hostname: format!("h{}.example", id % 97),
            url: format!("https://h{}.example/{id}", id % 97),
            headers,
            browser_tag: "demo".into(),
            capture_timestamp: 1_700_000_000 + id as i64,
        });
        labels.insert(id, if tracker { Label::Tracker } else { Label::NonTracker });
    }
    Dataset::new(records, Provenance::default(), Some(labels)).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = synthetic_dataset(4000, 0.3, 97);
    let spec = SplitSpec { train: 0.7, calib: 0.1, test: 0.2, seed: 1, stratified: true };
    let splits = split_dataset(&ds, &spec)?;
    let vocab = build_vocabulary(&splits.train, &VocabularyParams::default())?;
    let train = binarize(&splits.train, &vocab)?;
    let test = binarize(&splits.test, &vocab)?;
    println!(
        "train {} rows, test {} rows, {} feature columns\n",
        train.n_rows, test.n_rows, vocab.dim()
    );

    let mut rows = Vec::new();
    for kind in ModelKind::ALL {
        let clf = train_classifier(&train, kind, None, 42)?;
        let clf = Classifier::Plain(clf);
        let probs = clf.predict_proba(&test)?;
        let metrics = compute_metrics(&test.labels, &probs, 0.5)?;
        rows.push((kind.as_str().to_string(), metrics, None));
    }
    // Named boosting profiles are alternate hyperparameter presets of the
    // same gradient-boosting learner.
    let kind = ModelKind::from_str("gradient-boosting")?;
    let preset = trackhdr::models::boost::GradientBoostingParams::preset("lgbm").unwrap();
    let clf = Classifier::Plain(train_classifier(
        &train,
        kind,
        Some(trackhdr::models::ModelParams::GradientBoosting(preset)),
        42,
    )?);
    let probs = clf.predict_proba(&test)?;
    rows.push(("gb (lgbm preset)".into(), compute_metrics(&test.labels, &probs, 0.5)?, None));

    print!("{}", render_metrics_table(&rows));
    Ok(())
}
