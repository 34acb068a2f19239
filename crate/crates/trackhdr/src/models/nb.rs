//! Naive Bayes over binary features, in two flavors: Bernoulli
//! event-model with Laplace smoothing, and a Gaussian likelihood fitted to
//! the 0/1 values. Both compile down to the same sparse scoring form
//!
//!   log p(x | c) = base_c + sum over set bits of delta_c[f]
//!
//! where `base_c` is the all-zeros log-likelihood, so scoring a row costs
//! one addition per set bit instead of one per feature.

use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NbVariant {
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    pub variant: NbVariant,
    /// Laplace smoothing count (Bernoulli only).
    pub alpha: f64,
    /// Portion of the largest per-feature variance added to every variance
    /// (Gaussian only), guarding constant columns.
    pub var_smoothing: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { variant: NbVariant::Bernoulli, alpha: 1.0, var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    /// Log class priors, indexed [non-tracker, tracker].
    pub log_prior: [f64; 2],
    /// Log-likelihood of the all-zeros row per class.
    pub base: [f64; 2],
    /// Per-feature additive adjustment when the bit is set, per class.
    pub delta: Vec<[f64; 2]>,
}

pub fn fit_nb(
    rows: &[Vec<u32>],
    labels: &[u8],
    dim: usize,
    params: &NbParams,
) -> Result<NbModel, ModelError> {
    if params.alpha <= 0.0 {
        return Err(ModelError::InvalidParameter(format!(
            "smoothing alpha must be positive, got {}",
            params.alpha
        )));
    }
    let n = rows.len() as f64;
    let mut class_n = [0.0f64; 2];
    let mut counts = vec![[0.0f64; 2]; dim];
    for (row, &y) in rows.iter().zip(labels) {
        let c = y as usize;
        class_n[c] += 1.0;
        for &f in row {
            counts[f as usize][c] += 1.0;
        }
    }
    debug_assert!(class_n[0] > 0.0 && class_n[1] > 0.0, "single-class input reached fit_nb");

    let log_prior = [(class_n[0] / n).ln(), (class_n[1] / n).ln()];
    let mut base = [0.0f64; 2];
    let mut delta = vec![[0.0f64; 2]; dim];

    match params.variant {
        NbVariant::Bernoulli => {
            let a = params.alpha;
            for f in 0..dim {
                for c in 0..2 {
                    let theta = (counts[f][c] + a) / (class_n[c] + 2.0 * a);
                    base[c] += (1.0 - theta).ln();
                    delta[f][c] = theta.ln() - (1.0 - theta).ln();
                }
            }
        }
        NbVariant::Gaussian => {
            // For a 0/1 column the global variance is q(1-q).
            let max_var = (0..dim)
                .map(|f| {
                    let q = (counts[f][0] + counts[f][1]) / n;
                    q * (1.0 - q)
                })
                .fold(0.0f64, f64::max);
            let eps = params.var_smoothing * max_var.max(1e-12);
            for f in 0..dim {
                for c in 0..2 {
                    let mu = counts[f][c] / class_n[c];
                    let var = mu * (1.0 - mu) + eps;
                    let log_norm = -0.5 * (2.0 * std::f64::consts::PI * var).ln();
                    let at = |x: f64| log_norm - (x - mu) * (x - mu) / (2.0 * var);
                    base[c] += at(0.0);
                    delta[f][c] = at(1.0) - at(0.0);
                }
            }
        }
    }
    Ok(NbModel { log_prior, base, delta })
}

impl NbModel {
    pub fn predict_proba(&self, row: &[u32]) -> f64 {
        let mut score = [
            self.log_prior[0] + self.base[0],
            self.log_prior[1] + self.base[1],
        ];
        for &f in row {
            let d = self.delta[f as usize];
            score[0] += d[0];
            score[1] += d[1];
        }
        // p(tracker) via stable sigmoid of the log-odds.
        let m = score[1] - score[0];
        if m >= 0.0 {
            1.0 / (1.0 + (-m).exp())
        } else {
            let e = m.exp();
            e / (1.0 + e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_bernoulli_hand_computed_posterior() {
        // rows (1,0),(1,1),(0,1),(0,0) with labels T,T,NT,NT and alpha 1:
        //   theta(f0|T) = 3/4, theta(f1|T) = 1/2,
        //   theta(f0|NT) = 1/4, theta(f1|NT) = 1/2,
        // so p(T | x=(1,0)) = 0.375 / (0.375 + 0.125) = 0.75 exactly.
        let rows = vec![vec![0], vec![0, 1], vec![1], vec![]];
        let labels = vec![1, 1, 0, 0];
        let model = fit_nb(&rows, &labels, 2, &NbParams::default()).unwrap();
        assert!((model.predict_proba(&[0]) - 0.75).abs() < 1e-12);
        assert!((model.predict_proba(&[1]) - 0.25).abs() < 1e-12);
    }

    /// Dense oracle: evaluate the full product over every feature.
    fn dense_bernoulli_proba(
        rows: &[Vec<u32>],
        labels: &[u8],
        dim: usize,
        alpha: f64,
        x: &[u32],
    ) -> f64 {
        let mut class_n = [0.0f64; 2];
        let mut counts = vec![[0.0f64; 2]; dim];
        for (row, &y) in rows.iter().zip(labels) {
            class_n[y as usize] += 1.0;
            for &f in row {
                counts[f as usize][y as usize] += 1.0;
            }
        }
        let mut joint = [0.0f64; 2];
        for c in 0..2 {
            let mut log_p = (class_n[c] / rows.len() as f64).ln();
            for (f, count) in counts.iter().enumerate() {
                let theta = (count[c] + alpha) / (class_n[c] + 2.0 * alpha);
                let set = x.binary_search(&(f as u32)).is_ok();
                log_p += if set { theta.ln() } else { (1.0 - theta).ln() };
            }
            joint[c] = log_p.exp();
        }
        joint[1] / (joint[0] + joint[1])
    }

    #[test]
    fn test_sparse_scoring_matches_dense_oracle() {
        let dim = 6;
        let rows: Vec<Vec<u32>> = (0..30u32)
            .map(|i| (0..dim as u32).filter(|f| (i * 13 + f * 5) % 7 < 3).collect())
            .collect();
        let labels: Vec<u8> = (0..30).map(|i| u8::from((i * 11) % 3 == 0)).collect();
        let model = fit_nb(&rows, &labels, dim, &NbParams::default()).unwrap();
        for x in &rows {
            let want = dense_bernoulli_proba(&rows, &labels, dim, 1.0, x);
            assert!((model.predict_proba(x) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn test_gaussian_variant_separates() {
        let rows = vec![vec![0], vec![0], vec![0, 1], vec![1], vec![], vec![1]];
        let labels = vec![1, 1, 1, 0, 0, 0];
        let params = NbParams { variant: NbVariant::Gaussian, ..NbParams::default() };
        let model = fit_nb(&rows, &labels, 2, &params).unwrap();
        assert!(model.predict_proba(&[0]) > 0.5);
        assert!(model.predict_proba(&[1]) < 0.5);
    }

    #[test]
    fn test_invalid_alpha_rejected() {
        let rows = vec![vec![0], vec![]];
        let labels = vec![1, 0];
        let params = NbParams { alpha: 0.0, ..NbParams::default() };
        assert!(matches!(
            fit_nb(&rows, &labels, 1, &params),
            Err(ModelError::InvalidParameter(_))
        ));
    }

    #[test]
    fn test_priors_shift_probabilities() {
        // Same likelihoods, imbalanced classes: prior should pull the
        // no-evidence posterior toward the majority.
        let rows = vec![vec![], vec![], vec![], vec![0]];
        let labels = vec![0, 0, 0, 1];
        let model = fit_nb(&rows, &labels, 1, &NbParams::default()).unwrap();
        assert!(model.predict_proba(&[]) < 0.5);
    }
}
