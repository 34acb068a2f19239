//! Repeated stratified k-fold cross-validation.
//!
//! Every fold rebuilds the entire feature pipeline from its own training
//! portion — vocabulary construction included — so no fold ever sees
//! feature columns chosen with knowledge of its test records. Folds are
//! stratified round-robin: each class is shuffled per repeat, then dealt
//! fold 0, 1, ..., k-1, 0, ... so per-class fold sizes differ by at most
//! one.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, EvalError, MetricsReport, METRIC_NAMES};
use crate::features::{binarize, build_vocabulary, subset, VocabularyParams};
use crate::ingest::{Dataset, Label};
use crate::models::{train_classifier, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvParams {
    pub repeats: usize,
    pub folds: usize,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for CvParams {
    fn default() -> Self {
        CvParams { repeats: 5, folds: 5, seed: 0, threshold: 0.5 }
    }
}

/// One fitted-and-scored fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvFoldOutcome {
    pub model: String,
    pub repeat: usize,
    pub fold: usize,
    pub metrics: MetricsReport,
}

/// Mean and sample standard deviation per metric, with the number of folds
/// that produced a defined value (the ranking metrics can be undefined on
/// single-class test folds).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CvModelSummary {
    pub mean: BTreeMap<String, f64>,
    pub std: BTreeMap<String, f64>,
    pub n_evals: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub repeats: usize,
    pub folds: usize,
    pub seed: u64,
    pub threshold: f64,
    pub models: BTreeMap<String, CvModelSummary>,
    pub outcomes: Vec<CvFoldOutcome>,
}

/// Per-class round-robin fold assignment for one repeat. Returns, for each
/// fold, the sorted record positions it holds as test data.
fn stratified_folds(
    ds: &Dataset,
    folds: usize,
    seed: u64,
    repeat: usize,
) -> Result<Vec<Vec<usize>>, EvalError> {
    let label_map = ds
        .label_map
        .as_ref()
        .ok_or_else(|| EvalError::InvalidArgument("cross-validation needs labels".into()))?;
    let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (pos, r) in ds.records.iter().enumerate() {
        match label_map[&r.record_id] {
            Label::Tracker => classes[0].push(pos),
            Label::NonTracker => classes[1].push(pos),
        }
    }
    let mut assignment = vec![Vec::new(); folds];
    for (class_idx, class) in classes.iter().enumerate() {
        if class.len() < folds {
            return Err(EvalError::InvalidArgument(format!(
                "class {class_idx} has {} records, fewer than {folds} folds",
                class.len()
            )));
        }
        let mut shuffled = class.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((repeat * 2 + class_idx) as u64);
        shuffled.shuffle(&mut rng);
        for (i, &pos) in shuffled.iter().enumerate() {
            assignment[i % folds].push(pos);
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(assignment)
}

pub fn cross_validate(
    ds: &Dataset,
    vocab_params: &VocabularyParams,
    kinds: &[ModelKind],
    params: &CvParams,
) -> Result<CvReport, EvalError> {
    if params.folds < 2 {
        return Err(EvalError::InvalidArgument("need at least two folds".into()));
    }
    if params.repeats == 0 {
        return Err(EvalError::InvalidArgument("need at least one repeat".into()));
    }
    if kinds.is_empty() {
        return Err(EvalError::InvalidArgument("no model kinds requested".into()));
    }

    let mut outcomes = Vec::new();
    for repeat in 0..params.repeats {
        let fold_positions = stratified_folds(ds, params.folds, params.seed, repeat)?;
        for (fold, test_pos) in fold_positions.iter().enumerate() {
            let train_pos: Vec<usize> = fold_positions
                .iter()
                .enumerate()
                .filter(|(f, _)| *f != fold)
                .flat_map(|(_, p)| p.iter().copied())
                .collect();
            let mut train_pos = train_pos;
            train_pos.sort_unstable();

            let train_ds = subset(ds, &train_pos)?;
            let test_ds = subset(ds, test_pos)?;
            let vocab = build_vocabulary(&train_ds, vocab_params)?;
            let train_mat = binarize(&train_ds, &vocab)?;
            let test_mat = binarize(&test_ds, &vocab)?;

            // Fold-specific training seed, so resampling-based models do
            // not reuse one bootstrap pattern across folds.
            let fold_seed = params
                .seed
                .wrapping_add(((repeat * params.folds + fold) as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            for &kind in kinds {
                let clf = train_classifier(&train_mat, kind, None, fold_seed)?;
                let probs = clf.predict_proba(&test_mat)?;
                let metrics = compute_metrics(&test_mat.labels, &probs, params.threshold)?;
                outcomes.push(CvFoldOutcome {
                    model: kind.as_str().to_string(),
                    repeat,
                    fold,
                    metrics,
                });
            }
        }
    }

    let mut models: BTreeMap<String, CvModelSummary> = BTreeMap::new();
    for &kind in kinds {
        let name = kind.as_str().to_string();
        let mut summary = CvModelSummary::default();
        for metric in METRIC_NAMES {
            let vals: Vec<f64> = outcomes
                .iter()
                .filter(|o| o.model == name)
                .filter_map(|o| o.metrics.get(metric))
                .collect();
            if vals.is_empty() {
                continue;
            }
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let std = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            summary.mean.insert(metric.to_string(), mean);
            summary.std.insert(metric.to_string(), std);
            summary.n_evals.insert(metric.to_string(), vals.len());
        }
        models.insert(name, summary);
    }

    Ok(CvReport {
        repeats: params.repeats,
        folds: params.folds,
        seed: params.seed,
        threshold: params.threshold,
        models,
        outcomes,
    })
}
