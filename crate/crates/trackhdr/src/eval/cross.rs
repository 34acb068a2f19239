//! Cross-dataset transfer: score one trained model on several labeled
//! datasets (typically captures from other browsers) under the model's own
//! frozen vocabulary. Unknown headers simply miss the vocabulary, so a
//! shifted dataset can only lose features, never grow new ones.

use serde::{Deserialize, Serialize};

use super::{compute_metrics, EvalError, MetricsReport};
use crate::features::binarize;
use crate::features::HeaderVocabulary;
use crate::ingest::Dataset;
use crate::models::{Classifier, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferOutcome {
    pub tag: String,
    pub n_records: usize,
    /// Fraction of rows with no vocabulary header at all — a direct read
    /// on how foreign the target capture is to the training vocabulary.
    pub empty_row_rate: f64,
    pub metrics: MetricsReport,
}

pub fn cross_evaluate(
    clf: &Classifier,
    vocab: &HeaderVocabulary,
    datasets: &[(String, Dataset)],
    threshold: f64,
) -> Result<Vec<TransferOutcome>, EvalError> {
    if datasets.is_empty() {
        return Err(EvalError::InvalidArgument("no evaluation datasets given".into()));
    }
    let digest = vocab.digest();
    if clf.base().vocabulary_digest != digest {
        return Err(EvalError::Model(ModelError::VocabularyDigestMismatch {
            expected: clf.base().vocabulary_digest.clone(),
            found: digest,
        }));
    }

    let mut outcomes = Vec::with_capacity(datasets.len());
    for (tag, ds) in datasets {
        let mat = binarize(ds, vocab)?;
        let empty = mat.rows.iter().filter(|r| r.is_empty()).count();
        let probs = clf.predict_proba(&mat)?;
        let metrics = compute_metrics(&mat.labels, &probs, threshold)?;
        outcomes.push(TransferOutcome {
            tag: tag.clone(),
            n_records: mat.n_rows,
            empty_row_rate: empty as f64 / mat.n_rows as f64,
            metrics,
        });
    }
    Ok(outcomes)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::features::{build_vocabulary, VocabularyParams};
    use crate::ingest::{Direction, HttpMessageRecord, Label, Provenance};
    use crate::models::{train_classifier, ModelKind};

    fn browser_dataset(tag: &str, n: usize, tracker_header_rate: [usize; 2]) -> Dataset {
        let mut records = Vec::new();
        let mut labels = BTreeMap::new();
        for i in 0..n {
            let tracker = i % 3 == 0;
            let mut headers = vec![("etag".to_string(), format!("v{}", i % 4))];
            let rate = if tracker { tracker_header_rate[0] } else { tracker_header_rate[1] };
            if i % 10 < rate {
                headers.push(("x-sync".into(), format!("s{}", i % 3)));
            } else {
                headers.push(("x-static".into(), format!("c{}", i % 3)));
            }
            records.push(HttpMessageRecord {
                record_id: i as u64,
                direction: Direction::Response,
                remote_hostname: format!("h{i}.{tag}.example"),
                url: format!("https://h{i}.{tag}.example/"),
                headers,
                browser_tag: tag.into(),
                capture_timestamp: 0,
            });
            labels.insert(i as u64, if tracker { Label::Tracker } else { Label::NonTracker });
        }
        Dataset::new(records, Provenance::default(), Some(labels)).unwrap()
    }

    #[test]
    fn test_transfer_preserves_dataset_order_and_scores_each() {
        let train = browser_dataset("alpha", 120, [9, 1]);
        let vocab = build_vocabulary(&train, &VocabularyParams::default()).unwrap();
        let mat = binarize(&train, &vocab).unwrap();
        let clf = Classifier::Plain(
            train_classifier(&mat, ModelKind::DecisionTree, None, 1).unwrap(),
        );

        let targets = vec![
            ("beta".to_string(), browser_dataset("beta", 90, [9, 1])),
            ("gamma".to_string(), browser_dataset("gamma", 90, [6, 4])),
        ];
        let out = cross_evaluate(&clf, &vocab, &targets, 0.5).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].tag, "beta");
        assert_eq!(out[1].tag, "gamma");
        assert_eq!(out[0].n_records, 90);
        // Same header/label coupling as training: transfer should be strong.
        assert!(out[0].metrics.f1 > 0.8, "beta f1 = {}", out[0].metrics.f1);
        // Weaker coupling: strictly worse than the matched target.
        assert!(out[1].metrics.f1 < out[0].metrics.f1);
    }

    #[test]
    fn test_transfer_rejects_foreign_vocabulary() {
        let train = browser_dataset("alpha", 120, [9, 1]);
        let vocab = build_vocabulary(&train, &VocabularyParams::default()).unwrap();
        let mat = binarize(&train, &vocab).unwrap();
        let clf = Classifier::Plain(
            train_classifier(&mat, ModelKind::DecisionTree, None, 1).unwrap(),
        );

        // The digest covers columns and aliases, so a vocabulary with a
        // different column set cannot pair with this model.
        let mut other_vocab = vocab.clone();
        other_vocab.canonical.push("x-extra".into());
        let targets = vec![("beta".to_string(), browser_dataset("beta", 60, [9, 1]))];
        let err = cross_evaluate(&clf, &other_vocab, &targets, 0.5).unwrap_err();
        assert!(matches!(err, EvalError::Model(ModelError::VocabularyDigestMismatch { .. })));
    }

    #[test]
    fn test_fully_foreign_headers_yield_empty_rows_not_errors() {
        let train = browser_dataset("alpha", 120, [9, 1]);
        let vocab = build_vocabulary(&train, &VocabularyParams::default()).unwrap();
        let mat = binarize(&train, &vocab).unwrap();
        let clf = Classifier::Plain(
            train_classifier(&mat, ModelKind::NaiveBayes, None, 1).unwrap(),
        );

        let mut foreign = browser_dataset("zeta", 40, [9, 1]);
        for r in &mut foreign.records {
            r.headers = vec![("x-unheard-of".into(), "1".into())];
        }
        let targets = vec![("zeta".to_string(), foreign)];
        let out = cross_evaluate(&clf, &vocab, &targets, 0.5).unwrap();
        assert_eq!(out[0].empty_row_rate, 1.0);
        // Every row identical, so ranking metrics are pure-tie.
        assert_eq!(out[0].metrics.roc_auc, Some(0.5));
    }
}
