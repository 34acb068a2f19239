//! Repeated stratified cross-validation with the vocabulary rebuilt inside
//! every fold, so feature selection never sees the fold it is scored on.
//!
//! Run with: `cargo run --example cross_validation --release`

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trackhdr::eval::cv::{cross_validate, CvParams};
use trackhdr::features::VocabularyParams;
use trackhdr::ingest::{Dataset, Direction, HttpMessageRecord, Label, Provenance};
use trackhdr::models::ModelKind;

fn synthetic_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signal: &[(&str, f64, f64)] = &[
        ("x-sync-id", 0.8, 0.1),
        ("set-cookie", 0.85, 0.5),
        ("cache-control", 0.35, 0.85),
        ("etag", 0.3, 0.7),
    ];
    let mut records = Vec::new();
    let mut labels = BTreeMap::new();
    for id in 0..n as u64 {
        let tracker = rng.gen_bool(0.3);
        let mut headers: Vec<(String, String)> = Vec::new();
        for &(name, p_t, p_nt) in signal {
            if rng.gen_bool(if tracker { p_t } else { p_nt }) {
                headers.push((name.into(), format!("v{}", rng.gen_range(0..3))));
            }
        }
        if rng.gen_bool(0.5) {
            headers.push(("date".into(), format!("d{}", rng.gen_range(0..9))));
        }
        records.push(HttpMessageRecord {
            record_id: id,
            direction: Direction::Response,
            remote_hostname: format!("h{}.example", id % 59),
            url: format!("https://h{}.example/{id}", id % 59),
            headers,
            browser_tag: "demo".into(),
            capture_timestamp: 1_700_000_000 + id as i64,
        });
        labels.insert(id, if tracker { Label::Tracker } else { Label::NonTracker });
    }
    Dataset::new(records, Provenance::default(), Some(labels)).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = synthetic_dataset(2500, 31);
    let kinds = [ModelKind::NaiveBayes, ModelKind::LogisticRegression, ModelKind::RandomForest];
    let params = CvParams { repeats: 3, folds: 5, seed: 7, threshold: 0.5 };
    let report = cross_validate(&ds, &VocabularyParams::default(), &kinds, &params)?;

    println!(
        "{} repeats x {} folds = {} evaluations per model\n",
        report.repeats,
        report.folds,
        report.repeats * report.folds
    );
    for (model, summary) in &report.models {
        println!("{model}");
        for metric in ["f1", "mcc", "roc_auc", "log_loss"] {
            println!(
                "  {metric:<9} {:.4} +/- {:.4}",
                summary.mean[metric], summary.std[metric]
            );
        }
    }

    // Per-fold outcomes are kept, so spread can be inspected directly.
    let f1s: Vec<f64> = report
        .outcomes
        .iter()
        .filter(|o| o.model == "random-forest")
        .map(|o| o.metrics.f1)
        .collect();
    let (lo, hi) = f1s.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    println!("\nrandom-forest f1 across all {} folds: {lo:.4}..{hi:.4}", f1s.len());
    Ok(())
}
