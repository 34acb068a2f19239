//! Rendering: an aligned plain-text metric table (one row per model, an
//! optional confidence-interval row beneath) and CSV series for ROC,
//! precision-recall, and reliability curves.

use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapReport;
use super::{EvalError, MetricsReport};

/// (canonical metric name, table column heading).
const TABLE_COLUMNS: [(&str, &str); 9] = [
    ("accuracy", "acc"),
    ("balanced_accuracy", "bacc"),
    ("precision", "prec"),
    ("recall", "rec"),
    ("f1", "f1"),
    ("mcc", "mcc"),
    ("log_loss", "logloss"),
    ("roc_auc", "auc"),
    ("auprc", "auprc"),
];

/// Renders one row per model, metrics to four decimals, `n/a` where a
/// metric is undefined. Models with a bootstrap report get a second row
/// with the 95% interval per metric. Columns size themselves to their
/// widest cell, so intervals and large losses never break alignment.
pub fn render_metrics_table(rows: &[(String, MetricsReport, Option<BootstrapReport>)]) -> String {
    let mut grid: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["model".to_string()];
    header.extend(TABLE_COLUMNS.iter().map(|(_, h)| h.to_string()));
    grid.push(header);

    for (name, metrics, ci) in rows {
        let mut line = vec![name.clone()];
        for (metric, _) in TABLE_COLUMNS {
            line.push(match metrics.get(metric) {
                Some(v) => format!("{v:.4}"),
                None => "n/a".to_string(),
            });
        }
        grid.push(line);
        if let Some(ci) = ci {
            let mut line = vec!["  95% ci".to_string()];
            for (metric, _) in TABLE_COLUMNS {
                line.push(match ci.intervals.get(metric) {
                    Some(iv) => format!("{:.3}-{:.3}", iv.lo, iv.hi),
                    None => String::new(),
                });
            }
            grid.push(line);
        }
    }

    let n_cols = 1 + TABLE_COLUMNS.len();
    let widths: Vec<usize> = (0..n_cols)
        .map(|c| grid.iter().map(|row| row[c].len()).max().unwrap())
        .collect();

    let mut out = String::new();
    for (i, row) in grid.iter().enumerate() {
        let mut line = format!("{:<w$}", row[0], w = widths[0]);
        for (cell, w) in row[1..].iter().zip(&widths[1..]) {
            line.push_str(&format!("  {cell:>w$}"));
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(line.len()));
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points at every distinct score, descending, prefixed with the
/// predict-nothing anchor (threshold = infinity, origin).
pub fn roc_curve(labels: &[u8], probs: &[f64]) -> Result<Vec<RocPoint>, EvalError> {
    let groups = score_groups(labels, probs)?;
    let n_pos: u64 = groups.iter().map(|g| g.tp).sum();
    let n_neg: u64 = groups.iter().map(|g| g.fp).sum();
    let mut points = vec![RocPoint { threshold: f64::INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0u64, 0u64);
    for g in groups {
        tp += g.tp;
        fp += g.fp;
        points.push(RocPoint {
            threshold: g.score,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Precision-recall points at every distinct score, descending. The step
/// integral over these points is exactly the AUPRC metric.
pub fn pr_curve(labels: &[u8], probs: &[f64]) -> Result<Vec<PrPoint>, EvalError> {
    let groups = score_groups(labels, probs)?;
    let n_pos: u64 = groups.iter().map(|g| g.tp).sum();
    let mut points = Vec::with_capacity(groups.len());
    let (mut tp, mut fp) = (0u64, 0u64);
    for g in groups {
        tp += g.tp;
        fp += g.fp;
        points.push(PrPoint {
            threshold: g.score,
            recall: tp as f64 / n_pos as f64,
            precision: tp as f64 / (tp + fp) as f64,
        });
    }
    Ok(points)
}

struct ScoreGroup {
    score: f64,
    tp: u64,
    fp: u64,
}

/// Positive/negative counts per distinct score, scores descending.
fn score_groups(labels: &[u8], probs: &[f64]) -> Result<Vec<ScoreGroup>, EvalError> {
    if labels.len() != probs.len() {
        return Err(EvalError::DimensionMismatch(format!(
            "{} labels vs {} probabilities",
            labels.len(),
            probs.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(EvalError::InvalidArgument(
            "curves need both classes present".into(),
        ));
    }
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
    let mut groups: Vec<ScoreGroup> = Vec::new();
    for &i in &idx {
        match groups.last_mut() {
            Some(g) if g.score == probs[i] => {
                g.tp += u64::from(labels[i] == 1);
                g.fp += u64::from(labels[i] != 1);
            }
            _ => groups.push(ScoreGroup {
                score: probs[i],
                tp: u64::from(labels[i] == 1),
                fp: u64::from(labels[i] != 1),
            }),
        }
    }
    Ok(groups)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_predicted: f64,
    pub observed_rate: f64,
}

/// Equal-width probability bins over [0, 1]; the last bin includes 1.0.
/// Empty bins report zero mean and rate but keep their count of zero so
/// downstream plots can mask them.
pub fn reliability_bins(labels: &[u8], probs: &[f64], n_bins: usize) -> Result<Vec<ReliabilityBin>, EvalError> {
    if n_bins == 0 {
        return Err(EvalError::InvalidArgument("need at least one bin".into()));
    }
    if labels.len() != probs.len() {
        return Err(EvalError::DimensionMismatch(format!(
            "{} labels vs {} probabilities",
            labels.len(),
            probs.len()
        )));
    }
    let mut sums = vec![(0usize, 0.0f64, 0usize); n_bins]; // count, sum p, positives
    for (&y, &p) in labels.iter().zip(probs) {
        if !(0.0..=1.0).contains(&p) {
            return Err(EvalError::InvalidArgument(format!(
                "probability {p} outside [0, 1]"
            )));
        }
        let b = ((p * n_bins as f64) as usize).min(n_bins - 1);
        sums[b].0 += 1;
        sums[b].1 += p;
        sums[b].2 += usize::from(y == 1);
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(b, (count, p_sum, pos))| ReliabilityBin {
            lo: b as f64 / n_bins as f64,
            hi: (b + 1) as f64 / n_bins as f64,
            count,
            mean_predicted: if count == 0 { 0.0 } else { p_sum / count as f64 },
            observed_rate: if count == 0 { 0.0 } else { pos as f64 / count as f64 },
        })
        .collect())
}

pub fn roc_curve_csv(labels: &[u8], probs: &[f64]) -> Result<String, EvalError> {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in roc_curve(labels, probs)? {
        out.push_str(&format!("{},{:.6},{:.6}\n", fmt_threshold(p.threshold), p.fpr, p.tpr));
    }
    Ok(out)
}

pub fn pr_curve_csv(labels: &[u8], probs: &[f64]) -> Result<String, EvalError> {
    let mut out = String::from("threshold,recall,precision\n");
    for p in pr_curve(labels, probs)? {
        out.push_str(&format!("{},{:.6},{:.6}\n", fmt_threshold(p.threshold), p.recall, p.precision));
    }
    Ok(out)
}

pub fn reliability_csv(labels: &[u8], probs: &[f64], n_bins: usize) -> Result<String, EvalError> {
    let mut out = String::from("bin_lo,bin_hi,count,mean_predicted,observed_rate\n");
    for b in reliability_bins(labels, probs, n_bins)? {
        out.push_str(&format!(
            "{:.3},{:.3},{},{:.6},{:.6}\n",
            b.lo, b.hi, b.count, b.mean_predicted, b.observed_rate
        ));
    }
    Ok(out)
}

fn fmt_threshold(t: f64) -> String {
    if t.is_infinite() {
        "inf".to_string()
    } else {
        format!("{t:.6}")
    }
}

#[cfg(test)]
mod tests {
    use super::super::{auprc, bootstrap::bootstrap_intervals, compute_metrics};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn test_table_lines_are_aligned_and_complete() {
        let labels = [1, 1, 0, 0, 0];
        let probs = [0.9, 0.4, 0.6, 0.2, 0.1];
        let m = compute_metrics(&labels, &probs, 0.5).unwrap();
        let ci = bootstrap_intervals(&labels, &probs, 0.5, 49, 3).unwrap();
        let table = render_metrics_table(&[
            ("random_forest".into(), m.clone(), Some(ci)),
            ("tiny".into(), m, None),
        ]);
        let lines: Vec<&str> = table.lines().collect();
        // header, rule, forest row + ci row, tiny row.
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("model"));
        assert!(lines[2].starts_with("random_forest"));
        assert!(lines[3].contains('-'), "interval row should hold lo-hi cells");
        assert!(lines[4].starts_with("tiny"));
        for metric in ["acc", "bacc", "logloss", "auprc"] {
            assert!(lines[0].contains(metric));
        }
        // No line wider than the header; cells right-aligned under headings.
        let width = lines[0].len();
        assert!(lines.iter().all(|l| l.len() <= width));
    }

    #[test]
    fn test_table_renders_na_for_undefined_metrics() {
        let m = compute_metrics(&[0, 0], &[0.2, 0.3], 0.5).unwrap();
        let table = render_metrics_table(&[("constant".into(), m, None)]);
        assert!(table.contains("n/a"));
    }

    #[test]
    fn test_roc_curve_hand_case() {
        let labels = [1, 0];
        let probs = [0.9, 0.1];
        let pts = roc_curve(&labels, &probs).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!((pts[0].fpr, pts[0].tpr), (0.0, 0.0));
        assert_eq!((pts[1].threshold, pts[1].fpr, pts[1].tpr), (0.9, 0.0, 1.0));
        assert_eq!((pts[2].threshold, pts[2].fpr, pts[2].tpr), (0.1, 1.0, 1.0));
    }

    #[test]
    fn test_curves_end_at_full_recall() {
        let labels = [1, 0, 1, 0, 0, 1];
        let probs = [0.7, 0.7, 0.5, 0.4, 0.2, 0.1];
        let roc = roc_curve(&labels, &probs).unwrap();
        let last = roc.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        let pr = pr_curve(&labels, &probs).unwrap();
        assert_eq!(pr.last().unwrap().recall, 1.0);
    }

    #[test]
    fn test_pr_curve_step_integral_equals_auprc() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.gen_range(5..60);
            let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.4))).collect();
            if labels.iter().all(|&y| y == labels[0]) {
                continue;
            }
            // Coarse grid so ties actually occur.
            let probs: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..5)) / 4.0).collect();
            let pts = pr_curve(&labels, &probs).unwrap();
            let mut integral = 0.0;
            let mut prev_r = 0.0;
            for p in &pts {
                integral += (p.recall - prev_r) * p.precision;
                prev_r = p.recall;
            }
            let want = auprc(&labels, &probs).unwrap();
            assert!((integral - want).abs() < 1e-12, "{integral} vs {want}");
        }
    }

    #[test]
    fn test_reliability_bins_hand_case() {
        let labels = [1, 0, 1, 1];
        let probs = [0.05, 0.05, 0.95, 1.0];
        let bins = reliability_bins(&labels, &probs, 10).unwrap();
        assert_eq!(bins.len(), 10);
        assert_eq!(bins[0].count, 2);
        assert!((bins[0].mean_predicted - 0.05).abs() < 1e-12);
        assert!((bins[0].observed_rate - 0.5).abs() < 1e-12);
        // 1.0 lands in the last bin, not an eleventh.
        assert_eq!(bins[9].count, 2);
        assert_eq!(bins[9].observed_rate, 1.0);
        assert_eq!(bins[4].count, 0);
    }

    #[test]
    fn test_csv_outputs_have_headers_and_rows() {
        let labels = [1, 0, 1, 0];
        let probs = [0.8, 0.6, 0.4, 0.2];
        let roc = roc_curve_csv(&labels, &probs).unwrap();
        assert!(roc.starts_with("threshold,fpr,tpr\n"));
        assert_eq!(roc.lines().count(), 1 + 5); // anchor + 4 distinct scores
        assert!(roc.lines().nth(1).unwrap().starts_with("inf,"));
        let pr = pr_curve_csv(&labels, &probs).unwrap();
        assert_eq!(pr.lines().count(), 1 + 4);
        let rel = reliability_csv(&labels, &probs, 5).unwrap();
        assert_eq!(rel.lines().count(), 1 + 5);
    }

    #[test]
    fn test_curves_reject_single_class() {
        assert!(roc_curve(&[1, 1], &[0.5, 0.6]).is_err());
        assert!(pr_curve(&[0, 0], &[0.5, 0.6]).is_err());
    }
}
