//! Feature-importance measures.
//!
//! Impurity importance sums the split gains stored in tree nodes, so it is
//! only defined for tree-based models. Permutation importance works for
//! any classifier: shuffle one column at a time and record how much a
//! chosen metric degrades. Both are deterministic for a fixed seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::features::BinaryFeatureMatrix;

use super::{Classifier, ModelError, ModelState, TrainedClassifier};

/// Per-feature impurity importance, normalized to sum to one (all zeros if
/// the model never split). Errors for model families without trees.
pub fn impurity_importance(clf: &TrainedClassifier) -> Result<Vec<f64>, ModelError> {
    let mut gains = vec![0.0; clf.dim];
    match &clf.state {
        ModelState::Tree(t) => t.accumulate_gains(&mut gains),
        ModelState::Forest(trees) => {
            for t in trees {
                t.accumulate_gains(&mut gains);
            }
        }
        ModelState::AdaBoost(m) => {
            for (stump, _) in &m.stumps {
                stump.accumulate_gains(&mut gains);
            }
        }
        ModelState::GradientBoosted(m) => {
            for t in &m.trees {
                t.accumulate_gains(&mut gains);
            }
        }
        ModelState::Constant(_) => {}
        ModelState::NaiveBayes(_) | ModelState::Linear(_) => {
            return Err(ModelError::InvalidParameter(format!(
                "impurity importance is undefined for {}; use permutation importance",
                clf.kind
            )));
        }
    }
    let total: f64 = gains.iter().sum();
    if total > 0.0 {
        for g in &mut gains {
            *g /= total;
        }
    }
    Ok(gains)
}

/// Mean degradation of `metric` (higher-is-better) over `reps` independent
/// shuffles of each column, clipped at zero per repetition. Shuffle `r` of
/// feature `f` uses RNG stream `f * reps + r + 1`, so results are
/// independent of evaluation order and thread count.
pub fn permutation_importance(
    clf: &Classifier,
    mat: &BinaryFeatureMatrix,
    metric: &(dyn Fn(&[u8], &[f64]) -> f64 + Sync),
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>, ModelError> {
    if reps == 0 {
        return Err(ModelError::InvalidParameter("need at least one repetition".into()));
    }
    let baseline_probs = clf.predict_proba(mat)?;
    let baseline = metric(&mat.labels, &baseline_probs);
    let n = mat.n_rows;

    let importances: Vec<f64> = (0..mat.dim)
        .into_par_iter()
        .map(|f| {
            let feature = f as u32;
            let had: Vec<bool> =
                mat.rows.iter().map(|r| r.binary_search(&feature).is_ok()).collect();
            let mut degradation = 0.0;
            for rep in 0..reps {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((f * reps + rep) as u64 + 1);
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);

                // Only rows whose bit flips need re-prediction; the rest
                // reuse the baseline probabilities.
                let mut probs = baseline_probs.clone();
                for i in 0..n {
                    let new_bit = had[perm[i]];
                    if new_bit == had[i] {
                        continue;
                    }
                    let mut row = mat.rows[i].clone();
                    if new_bit {
                        let at = row.partition_point(|&c| c < feature);
                        row.insert(at, feature);
                    } else {
                        row.retain(|&c| c != feature);
                    }
                    probs[i] = match clf {
                        Classifier::Plain(c) => c.predict_row(&row),
                        Classifier::Calibrated { base, mapping } => {
                            mapping.apply(base.predict_row(&row))
                        }
                    };
                }
                degradation += (baseline - metric(&mat.labels, &probs)).max(0.0);
            }
            degradation / reps as f64
        })
        .collect();
    Ok(importances)
}
