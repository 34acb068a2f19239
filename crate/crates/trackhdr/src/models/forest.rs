//! Tree ensembles: bagged forests (bootstrap resamples expressed as
//! integer sample weights) and extremely randomized trees (no bootstrap,
//! random tie-breaking). Trees are independent, so they train in parallel;
//! each tree draws from its own counter-mode RNG stream, which makes the
//! ensemble identical regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, FeatureMode, TieBreak, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub tree: TreeParams,
}

impl ForestParams {
    /// Bagged forest: bootstrap resampling, sqrt-sampled features,
    /// deterministic tie-breaks.
    pub fn bagged() -> Self {
        ForestParams {
            n_trees: 100,
            bootstrap: true,
            tree: TreeParams { feature_mode: FeatureMode::SqrtSampled, ..TreeParams::default() },
        }
    }

    /// Extremely randomized: full sample per tree, randomness moved into
    /// the per-node feature draw and tie-breaking.
    pub fn extremely_randomized() -> Self {
        ForestParams {
            n_trees: 100,
            bootstrap: false,
            tree: TreeParams {
                feature_mode: FeatureMode::SqrtSampled,
                tie_break: TieBreak::Random,
                ..TreeParams::default()
            },
        }
    }
}

/// Trains `params.n_trees` trees. Tree `t` uses RNG stream `t + 1` of the
/// given seed for its bootstrap draw, feature sampling, and tie-breaks.
pub fn fit_forest(
    rows: &[Vec<u32>],
    labels: &[u8],
    dim: usize,
    params: &ForestParams,
    seed: u64,
) -> Vec<DecisionTree> {
    let n = rows.len();
    (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64 + 1);
            let weights = params.bootstrap.then(|| {
                let mut counts = vec![0.0f64; n];
                for _ in 0..n {
                    counts[rng.gen_range(0..n)] += 1.0;
                }
                counts
            });
            DecisionTree::fit(rows, labels, weights.as_deref(), dim, &params.tree, &mut rng)
        })
        .collect()
}

/// Ensemble probability: mean of the member trees' leaf probabilities.
pub fn forest_predict_proba(trees: &[DecisionTree], row: &[u32]) -> f64 {
    let sum: f64 = trees.iter().map(|t| t.predict_proba(row)).sum();
    sum / trees.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 40 rows where feature 0 is the signal and 1..4 are noise bits laid
    /// out in a fixed pattern.
    fn noisy_data() -> (Vec<Vec<u32>>, Vec<u8>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40u32 {
            let mut row = Vec::new();
            if i < 20 {
                row.push(0);
            }
            for f in 1..4 {
                if (i * 7 + f * 3) % 5 < 2 {
                    row.push(f);
                }
            }
            rows.push(row);
            labels.push(u8::from(i < 20));
        }
        (rows, labels)
    }

    #[test]
    fn test_bagged_forest_learns_signal() {
        let (rows, labels) = noisy_data();
        let trees = fit_forest(&rows, &labels, 4, &ForestParams::bagged(), 7);
        assert_eq!(trees.len(), 100);
        let correct = rows
            .iter()
            .zip(&labels)
            .filter(|(r, &y)| (forest_predict_proba(&trees, r) >= 0.5) == (y == 1))
            .count();
        assert!(correct >= 38, "only {correct}/40 correct");
    }

    #[test]
    fn test_extremely_randomized_learns_signal() {
        let (rows, labels) = noisy_data();
        let trees = fit_forest(&rows, &labels, 4, &ForestParams::extremely_randomized(), 7);
        let correct = rows
            .iter()
            .zip(&labels)
            .filter(|(r, &y)| (forest_predict_proba(&trees, r) >= 0.5) == (y == 1))
            .count();
        assert!(correct >= 38, "only {correct}/40 correct");
    }

    #[test]
    fn test_forest_is_deterministic_for_seed() {
        let (rows, labels) = noisy_data();
        let a = fit_forest(&rows, &labels, 4, &ForestParams::bagged(), 3);
        let b = fit_forest(&rows, &labels, 4, &ForestParams::bagged(), 3);
        assert_eq!(a, b);
        let c = fit_forest(&rows, &labels, 4, &ForestParams::bagged(), 4);
        assert_ne!(a, c);
    }

    #[test]
    fn test_forest_identical_across_thread_counts() {
        let (rows, labels) = noisy_data();
        let params = ForestParams { n_trees: 16, ..ForestParams::bagged() };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| fit_forest(&rows, &labels, 4, &params, 11));
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| fit_forest(&rows, &labels, 4, &params, 11));
        assert_eq!(single, multi);
    }

    #[test]
    fn test_bootstrap_trees_differ() {
        let (rows, labels) = noisy_data();
        let trees = fit_forest(&rows, &labels, 4, &ForestParams::bagged(), 5);
        assert!(trees.windows(2).any(|w| w[0] != w[1]), "all trees identical");
    }
}
