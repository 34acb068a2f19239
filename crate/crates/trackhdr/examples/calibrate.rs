//! Isotonic calibration: fit a monotone score-to-probability mapping on a
//! held-out calibration split and watch log-loss drop while ranking
//! metrics stay put.
//!
//! Run with: `cargo run --example calibrate --release`

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trackhdr::eval::report::reliability_bins;
use trackhdr::eval::{log_loss, roc_auc};
use trackhdr::features::{binarize, build_vocabulary, split_dataset, SplitSpec, VocabularyParams};
use trackhdr::ingest::{Dataset, Direction, HttpMessageRecord, Label, Provenance};
use trackhdr::models::{calibrate_classifier, train_classifier, Classifier, ModelKind};

/// Naive Bayes assumes header presences are independent given the label.
/// This generator violates that hard: six headers are noisy copies of one
/// latent "tracking stack" bit, so NB multiplies six pieces of what is
/// really one piece of evidence and its probabilities slam into 0 and 1.
fn synthetic_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stack = ["x-uid", "set-cookie", "p3p", "x-pixel", "x-sync", "x-aud-seg"];
    let mut records = Vec::new();
    let mut labels = BTreeMap::new();
    for id in 0..n as u64 {
        let tracker = rng.gen_bool(0.25);
        let latent = rng.gen_bool(if tracker { 0.75 } else { 0.2 });
        let mut headers: Vec<(String, String)> = vec![
            ("content-type".into(), format!("t/{}", rng.gen_range(0..3))),
        ];
        for &name in &stack {
            if rng.gen_bool(if latent { 0.9 } else { 0.08 }) {
                headers.push((name.into(), format!("v{}", rng.gen_range(0..3))));
            }
        }
        for (name, p_t, p_nt) in [("cache-control", 0.3, 0.8), ("etag", 0.3, 0.7)] {
            if rng.gen_bool(if tracker { p_t } else { p_nt }) {
                headers.push((name.into(), format!("v{}", rng.gen_range(0..3))));
            }
        }
        records.push(HttpMessageRecord {
            record_id: id,
            direction: Direction::Response,
            remote_hostname: format!("s{}.example", id % 71),
            url: format!("https://s{}.example/{id}", id % 71),
            headers,
            browser_tag: "demo".into(),
            capture_timestamp: 1_700_000_000 + id as i64,
        });
        labels.insert(id, if tracker { Label::Tracker } else { Label::NonTracker });
    }
    Dataset::new(records, Provenance::default(), Some(labels)).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = synthetic_dataset(6000, 5);
    let spec = SplitSpec { train: 0.6, calib: 0.2, test: 0.2, seed: 9, stratified: true };
    let splits = split_dataset(&ds, &spec)?;
    let vocab = build_vocabulary(&splits.train, &VocabularyParams::default())?;
    let train = binarize(&splits.train, &vocab)?;
    let calib = binarize(&splits.calib, &vocab)?;
    let test = binarize(&splits.test, &vocab)?;

    let raw = Classifier::Plain(train_classifier(&train, ModelKind::NaiveBayes, None, 3)?);
    let raw_probs = raw.predict_proba(&test)?;

    let calibrated = match &raw {
        Classifier::Plain(base) => calibrate_classifier(base.clone(), &calib)?,
        _ => unreachable!(),
    };
    let cal_probs = calibrated.predict_proba(&test)?;
    if let Classifier::Calibrated { mapping, .. } = &calibrated {
        println!(
            "isotonic mapping: {} monotone steps fitted on {} calibration rows",
            mapping.thresholds.len(),
            calib.n_rows
        );
    }

    println!(
        "\n              log-loss   roc-auc\n  raw           {:.4}    {:.4}\n  calibrated    {:.4}    {:.4}",
        log_loss(&test.labels, &raw_probs),
        roc_auc(&test.labels, &raw_probs).unwrap(),
        log_loss(&test.labels, &cal_probs),
        roc_auc(&test.labels, &cal_probs).unwrap(),
    );
    println!("  (the mapping is monotone: ranking survives up to ties, so auc barely moves)");

    println!("\nreliability (10 equal-width bins): predicted vs observed tracker rate");
    for bins in [reliability_bins(&test.labels, &raw_probs, 10)?, reliability_bins(&test.labels, &cal_probs, 10)?] {
        let line: Vec<String> = bins
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| format!("{:.2}->{:.2}", b.mean_predicted, b.observed_rate))
            .collect();
        println!("  {}", line.join("  "));
    }
    Ok(())
}
