//! Isotonic regression by pool-adjacent-violators, used to calibrate raw
//! classifier scores into probabilities. The fitted map is a monotone
//! non-decreasing step function; rows with equal scores are pooled before
//! the PAV pass so the fit never depends on input order.

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicMapping {
    /// Strictly increasing block boundaries: each block's smallest score.
    pub thresholds: Vec<f64>,
    /// Calibrated value of each block; non-decreasing.
    pub values: Vec<f64>,
}

struct Block {
    min_score: f64,
    weight: f64,
    target_sum: f64,
}

impl Block {
    fn value(&self) -> f64 {
        self.target_sum / self.weight
    }
}

pub fn fit_isotonic(
    scores: &[f64],
    targets: &[f64],
    weights: Option<&[f64]>,
) -> Result<IsotonicMapping, ModelError> {
    if scores.is_empty() || scores.len() != targets.len() {
        return Err(ModelError::InvalidParameter(format!(
            "calibration needs equal, non-zero sample counts (scores {}, targets {})",
            scores.len(),
            targets.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != scores.len() || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(ModelError::InvalidParameter(
                "weights must match sample count and be finite and non-negative".into(),
            ));
        }
    }
    if scores.iter().any(|s| !s.is_finite()) || targets.iter().any(|t| !t.is_finite()) {
        return Err(ModelError::InvalidParameter(
            "scores and targets must be finite".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap().then(a.cmp(&b)));

    // Pre-pool exactly equal scores, then pool adjacent violators.
    let mut stack: Vec<Block> = Vec::new();
    for &i in &order {
        let w = weights.map_or(1.0, |ws| ws[i]);
        if w == 0.0 {
            continue;
        }
        match stack.last_mut() {
            Some(top) if top.min_score == scores[i] => {
                top.weight += w;
                top.target_sum += w * targets[i];
            }
            _ => stack.push(Block { min_score: scores[i], weight: w, target_sum: w * targets[i] }),
        }
        while stack.len() >= 2 {
            let prev = &stack[stack.len() - 2];
            let top = &stack[stack.len() - 1];
            if prev.value() > top.value() {
                let top = stack.pop().unwrap();
                let prev = stack.last_mut().unwrap();
                prev.weight += top.weight;
                prev.target_sum += top.target_sum;
            } else {
                break;
            }
        }
    }
    if stack.is_empty() {
        return Err(ModelError::InvalidParameter("all calibration weights are zero".into()));
    }
    Ok(IsotonicMapping {
        thresholds: stack.iter().map(|b| b.min_score).collect(),
        values: stack.iter().map(|b| b.value()).collect(),
    })
}

impl IsotonicMapping {
    /// Value of the rightmost block whose threshold does not exceed `s`;
    /// scores below the first block clamp to its value.
    pub fn apply(&self, s: f64) -> f64 {
        let pos = self.thresholds.partition_point(|t| *t <= s);
        if pos == 0 {
            self.values[0]
        } else {
            self.values[pos - 1]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_hand_fixture() {
        // The middle two samples violate monotonicity and pool to 0.5.
        let mapping =
            fit_isotonic(&[0.1, 0.35, 0.4, 0.8], &[0.0, 1.0, 0.0, 1.0], None).unwrap();
        assert_eq!(mapping.thresholds, vec![0.1, 0.35, 0.8]);
        assert_eq!(mapping.values, vec![0.0, 0.5, 1.0]);
        let applied: Vec<f64> =
            [0.1, 0.35, 0.4, 0.8].iter().map(|&s| mapping.apply(s)).collect();
        assert_eq!(applied, vec![0.0, 0.5, 0.5, 1.0]);
    }

    #[test]
    fn test_monotone_input_is_unchanged() {
        let mapping = fit_isotonic(&[0.1, 0.2, 0.3], &[0.0, 0.5, 1.0], None).unwrap();
        assert_eq!(mapping.values, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn test_equal_scores_pool_to_mean() {
        let mapping = fit_isotonic(&[0.5, 0.5, 0.5, 0.5], &[0.0, 1.0, 1.0, 0.0], None).unwrap();
        assert_eq!(mapping.thresholds, vec![0.5]);
        assert_eq!(mapping.values, vec![0.5]);
    }

    #[test]
    fn test_input_order_is_irrelevant() {
        let a = fit_isotonic(&[0.4, 0.1, 0.8, 0.35], &[0.0, 0.0, 1.0, 1.0], None).unwrap();
        let b = fit_isotonic(&[0.1, 0.35, 0.4, 0.8], &[0.0, 1.0, 0.0, 1.0], None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn test_weights_match_replication() {
        let weighted =
            fit_isotonic(&[0.2, 0.6], &[0.0, 1.0], Some(&[3.0, 2.0])).unwrap();
        let replicated = fit_isotonic(
            &[0.2, 0.2, 0.2, 0.6, 0.6],
            &[0.0, 0.0, 0.0, 1.0, 1.0],
            None,
        )
        .unwrap();
        assert_eq!(weighted, replicated);
    }

    #[test]
    fn test_apply_clamps_outside_range() {
        let mapping = fit_isotonic(&[0.2, 0.8], &[0.25, 0.75], None).unwrap();
        assert_eq!(mapping.apply(-5.0), 0.25);
        assert_eq!(mapping.apply(0.0), 0.25);
        assert_eq!(mapping.apply(1.0), 0.75);
        assert_eq!(mapping.apply(99.0), 0.75);
    }

    #[test]
    fn test_result_is_always_monotone() {
        // Adversarial zig-zag targets.
        let scores: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let targets: Vec<f64> = (0..50).map(|i| f64::from(i % 3 == 0)).collect();
        let mapping = fit_isotonic(&scores, &targets, None).unwrap();
        for pair in mapping.values.windows(2) {
            assert!(pair[0] <= pair[1]);
        }
        for pair in mapping.thresholds.windows(2) {
            assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn test_degenerate_inputs_rejected() {
        assert!(fit_isotonic(&[], &[], None).is_err());
        assert!(fit_isotonic(&[0.5], &[1.0, 0.0], None).is_err());
        assert!(fit_isotonic(&[f64::NAN], &[1.0], None).is_err());
        assert!(fit_isotonic(&[0.5], &[1.0], Some(&[-1.0])).is_err());
        assert!(fit_isotonic(&[0.5], &[1.0], Some(&[0.0])).is_err());
    }
}
