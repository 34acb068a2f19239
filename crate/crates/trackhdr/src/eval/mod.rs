//! Evaluation: an imbalance-aware metric suite, bootstrap confidence
//! intervals, repeated stratified cross-validation, cross-dataset
//! transfer, and plain-text/CSV report rendering.
//!
//! Conventions, fixed across the crate: the tracker class is positive, a
//! row is predicted positive when its probability is >= the threshold,
//! ratio metrics with a zero denominator evaluate to 0, and the two
//! ranking metrics are undefined (None) when either class is absent.

pub mod bootstrap;
pub mod cross;
pub mod cv;
pub mod report;

use serde::{Deserialize, Serialize};

use crate::models::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
}

pub const LOG_LOSS_CLIP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn from_probs(labels: &[u8], probs: &[f64], threshold: f64) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix { tp: 0, fp: 0, tn: 0, fn_: 0 };
        for (&y, &p) in labels.iter().zip(probs) {
            match (y == 1, p >= threshold) {
                (true, true) => cm.tp += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
                (true, false) => cm.fn_ += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    fn rate(num: u64, den: u64) -> f64 {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn recall(&self) -> f64 {
        Self::rate(self.tp, self.tp + self.fn_)
    }

    pub fn precision(&self) -> f64 {
        Self::rate(self.tp, self.tp + self.fp)
    }

    pub fn specificity(&self) -> f64 {
        Self::rate(self.tn, self.tn + self.fp)
    }

    pub fn balanced_accuracy(&self) -> f64 {
        (self.recall() + self.specificity()) / 2.0
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn mcc(&self) -> f64 {
        let (tp, fp, tn, fn_) = (self.tp as f64, self.fp as f64, self.tn as f64, self.fn_ as f64);
        let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
        if denom == 0.0 {
            0.0
        } else {
            (tp * tn - fp * fn_) / denom
        }
    }
}

/// The full metric suite at one decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mcc: f64,
    pub log_loss: f64,
    /// None when the evaluation set holds a single class.
    pub roc_auc: Option<f64>,
    pub auprc: Option<f64>,
}

impl MetricsReport {
    /// Metric by report-canonical name, for table rendering and CI keys.
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "accuracy" => Some(self.accuracy),
            "balanced_accuracy" => Some(self.balanced_accuracy),
            "precision" => Some(self.precision),
            "recall" => Some(self.recall),
            "f1" => Some(self.f1),
            "mcc" => Some(self.mcc),
            "log_loss" => Some(self.log_loss),
            "roc_auc" => self.roc_auc,
            "auprc" => self.auprc,
            _ => None,
        }
    }
}

/// Report-canonical metric order.
pub const METRIC_NAMES: [&str; 9] = [
    "accuracy",
    "balanced_accuracy",
    "precision",
    "recall",
    "f1",
    "mcc",
    "log_loss",
    "roc_auc",
    "auprc",
];

pub fn log_loss(labels: &[u8], probs: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&y, &p) in labels.iter().zip(probs) {
        let p = p.clamp(LOG_LOSS_CLIP, 1.0 - LOG_LOSS_CLIP);
        total -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    total / labels.len() as f64
}

/// Area under the ROC curve via the rank-sum statistic; ties get midranks.
pub fn roc_auc(labels: &[u8], probs: &[f64]) -> Option<f64> {
    let n = labels.len();
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| probs[a].partial_cmp(&probs[b]).unwrap().then(a.cmp(&b)));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && probs[idx[j + 1]] == probs[idx[i]] {
            j += 1;
        }
        let midrank = (i + j + 2) as f64 / 2.0;
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let n_pos = n_pos as f64;
    Some((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}

/// Area under the precision-recall curve as the step integral
/// sum over thresholds of (recall_i - recall_{i-1}) * precision_i, with
/// tied probabilities collapsed into one threshold step.
pub fn auprc(labels: &[u8], probs: &[f64]) -> Option<f64> {
    let n = labels.len();
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == n {
        return None;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && probs[idx[j + 1]] == probs[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Some(area)
}

pub fn compute_metrics(
    labels: &[u8],
    probs: &[f64],
    threshold: f64,
) -> Result<MetricsReport, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::InvalidArgument("cannot evaluate an empty set".into()));
    }
    if labels.len() != probs.len() {
        return Err(EvalError::DimensionMismatch(format!(
            "{} labels vs {} probabilities",
            labels.len(),
            probs.len()
        )));
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(EvalError::InvalidArgument("probabilities must be finite".into()));
    }
    let confusion = ConfusionMatrix::from_probs(labels, probs, threshold);
    Ok(MetricsReport {
        threshold,
        confusion,
        accuracy: confusion.accuracy(),
        balanced_accuracy: confusion.balanced_accuracy(),
        precision: confusion.precision(),
        recall: confusion.recall(),
        f1: confusion.f1(),
        mcc: confusion.mcc(),
        log_loss: log_loss(labels, probs),
        roc_auc: roc_auc(labels, probs),
        auprc: auprc(labels, probs),
    })
}
