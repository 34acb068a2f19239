//! Percentile bootstrap confidence intervals over the metric suite.
//!
//! Each resample draws n indices with replacement from its own RNG stream,
//! so intervals are independent of evaluation order and thread count.
//! Resamples that draw a single class keep their threshold-free metrics
//! (accuracy, log loss) but are skipped for every class-conditional metric;
//! the skip count is reported so starved intervals are visible.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, EvalError, METRIC_NAMES};
use crate::util::quantile_sorted;

pub const DEFAULT_RESAMPLES: usize = 599;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricInterval {
    pub lo: f64,
    pub hi: f64,
    /// Resamples that contributed to this interval.
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub n_resamples: usize,
    pub seed: u64,
    /// Resamples whose draw held a single class.
    pub skipped_single_class: usize,
    pub intervals: BTreeMap<String, MetricInterval>,
}

/// Metrics that stay well-defined on a single-class draw.
fn defined_on_single_class(name: &str) -> bool {
    matches!(name, "accuracy" | "log_loss")
}

pub fn bootstrap_intervals(
    labels: &[u8],
    probs: &[f64],
    threshold: f64,
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapReport, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::InvalidArgument("cannot bootstrap an empty set".into()));
    }
    if labels.len() != probs.len() {
        return Err(EvalError::DimensionMismatch(format!(
            "{} labels vs {} probabilities",
            labels.len(),
            probs.len()
        )));
    }
    if n_resamples == 0 {
        return Err(EvalError::InvalidArgument("need at least one resample".into()));
    }

    let n = labels.len();
    let mut samples: BTreeMap<&str, Vec<f64>> =
        METRIC_NAMES.iter().map(|&m| (m, Vec::with_capacity(n_resamples))).collect();
    let mut skipped_single_class = 0usize;

    let mut rl = Vec::with_capacity(n);
    let mut rp = Vec::with_capacity(n);
    for r in 0..n_resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64 + 1);
        rl.clear();
        rp.clear();
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            rl.push(labels[i]);
            rp.push(probs[i]);
        }
        let single_class = rl.iter().all(|&y| y == rl[0]);
        if single_class {
            skipped_single_class += 1;
        }
        let m = compute_metrics(&rl, &rp, threshold)?;
        for name in METRIC_NAMES {
            if single_class && !defined_on_single_class(name) {
                continue;
            }
            if let Some(v) = m.get(name) {
                samples.get_mut(name).unwrap().push(v);
            }
        }
    }

    let mut intervals = BTreeMap::new();
    for (name, mut vals) in samples {
        if vals.is_empty() {
            continue;
        }
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        intervals.insert(
            name.to_string(),
            MetricInterval {
                lo: quantile_sorted(&vals, 0.025),
                hi: quantile_sorted(&vals, 0.975),
                n_samples: vals.len(),
            },
        );
    }

    Ok(BootstrapReport { n_resamples, seed, skipped_single_class, intervals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(n_pos: usize, n_neg: usize) -> (Vec<u8>, Vec<f64>) {
        // Positives concentrated high, negatives low, with deterministic jitter.
        let mut labels = Vec::new();
        let mut probs = Vec::new();
        for i in 0..n_pos {
            labels.push(1);
            probs.push(0.7 + 0.25 * ((i % 10) as f64 / 10.0));
        }
        for i in 0..n_neg {
            labels.push(0);
            probs.push(0.05 + 0.3 * ((i % 10) as f64 / 10.0));
        }
        (labels, probs)
    }

    #[test]
    fn test_bootstrap_is_deterministic() {
        let (labels, probs) = synthetic(40, 160);
        let a = bootstrap_intervals(&labels, &probs, 0.5, 99, 7).unwrap();
        let b = bootstrap_intervals(&labels, &probs, 0.5, 99, 7).unwrap();
        assert_eq!(a, b);
        // The data is separable, so threshold metrics are constant across
        // resamples; log loss moves with draw composition and must react
        // to the seed.
        let c = bootstrap_intervals(&labels, &probs, 0.5, 99, 8).unwrap();
        assert_ne!(a.intervals["log_loss"], c.intervals["log_loss"]);
    }

    #[test]
    fn test_interval_brackets_point_estimate() {
        let (labels, probs) = synthetic(50, 150);
        let point = compute_metrics(&labels, &probs, 0.5).unwrap();
        let rep = bootstrap_intervals(&labels, &probs, 0.5, DEFAULT_RESAMPLES, 3).unwrap();
        for name in METRIC_NAMES {
            let iv = &rep.intervals[name];
            let v = point.get(name).unwrap();
            assert!(iv.lo <= v && v <= iv.hi, "{name}: {v} outside [{}, {}]", iv.lo, iv.hi);
            assert!(iv.lo <= iv.hi);
        }
        assert_eq!(rep.skipped_single_class, 0);
    }

    #[test]
    fn test_single_class_draws_are_counted_and_skipped() {
        // One positive among 50: many resamples will miss it entirely.
        let (labels, probs) = synthetic(1, 49);
        let rep = bootstrap_intervals(&labels, &probs, 0.5, 199, 11).unwrap();
        assert!(rep.skipped_single_class > 0, "expected some all-negative draws");
        let f1 = &rep.intervals["f1"];
        let acc = &rep.intervals["accuracy"];
        assert_eq!(acc.n_samples, 199);
        assert_eq!(f1.n_samples, 199 - rep.skipped_single_class);
    }

    #[test]
    fn test_degenerate_input_never_produces_intervals_for_ranking() {
        let labels = vec![0u8; 20];
        let probs = vec![0.2; 20];
        let rep = bootstrap_intervals(&labels, &probs, 0.5, 49, 5).unwrap();
        assert_eq!(rep.skipped_single_class, 49);
        assert!(!rep.intervals.contains_key("roc_auc"));
        assert!(rep.intervals.contains_key("accuracy"));
    }

    #[test]
    fn test_bootstrap_input_validation() {
        assert!(bootstrap_intervals(&[], &[], 0.5, 10, 1).is_err());
        assert!(bootstrap_intervals(&[1], &[0.5], 0.5, 0, 1).is_err());
        assert!(bootstrap_intervals(&[1, 0], &[0.5], 0.5, 10, 1).is_err());
    }
}
