//! Boosted ensembles: adaptive boosting over depth-1 stumps and gradient
//! boosting with second-order (Newton) leaf values on the logistic loss.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeParams};
use super::ModelError;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// ---------------------------------------------------------------------------
// Adaptive boosting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub n_rounds: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        AdaBoostParams { n_rounds: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    /// (stump, vote weight) pairs, in training order.
    pub stumps: Vec<(DecisionTree, f64)>,
}

/// Reweighted rounds of depth-1 stumps. A round whose weighted error
/// reaches 0.5 is discarded and training stops; a perfect round is kept
/// and likewise ends training.
pub fn fit_adaboost(
    rows: &[Vec<u32>],
    labels: &[u8],
    dim: usize,
    params: &AdaBoostParams,
    seed: u64,
) -> AdaBoostModel {
    let n = rows.len();
    let stump_params = TreeParams { max_depth: Some(1), ..TreeParams::default() };
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();

    for round in 0..params.n_rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round as u64 + 1);
        let stump = DecisionTree::fit(rows, labels, Some(&weights), dim, &stump_params, &mut rng);

        let mut err = 0.0;
        let misses: Vec<bool> = rows
            .iter()
            .zip(labels)
            .map(|(row, &y)| (stump.predict_proba(row) >= 0.5) != (y == 1))
            .collect();
        for (w, &miss) in weights.iter().zip(&misses) {
            if miss {
                err += w;
            }
        }
        if err >= 0.5 {
            break;
        }
        let alpha = ((1.0 - err) / err.max(1e-12)).ln();
        stumps.push((stump, alpha));
        if err <= 1e-12 {
            break;
        }
        let mut total = 0.0;
        for (w, &miss) in weights.iter_mut().zip(&misses) {
            if miss {
                *w *= alpha.exp();
            }
            total += *w;
        }
        for w in &mut weights {
            *w /= total;
        }
    }
    AdaBoostModel { stumps }
}

impl AdaBoostModel {
    /// Probability from the normalized vote margin m in [-1, 1], squashed
    /// as sigmoid(2m) so a unanimous ensemble saturates smoothly.
    pub fn predict_proba(&self, row: &[u32]) -> f64 {
        if self.stumps.is_empty() {
            return 0.5;
        }
        let mut margin = 0.0;
        let mut total = 0.0;
        for (stump, alpha) in &self.stumps {
            let s = if stump.predict_proba(row) >= 0.5 { 1.0 } else { -1.0 };
            margin += alpha * s;
            total += alpha;
        }
        sigmoid(2.0 * margin / total)
    }
}

// ---------------------------------------------------------------------------
// Gradient boosting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingParams {
    pub n_stages: usize,
    pub max_depth: u32,
    pub shrinkage: f64,
}

impl Default for GradientBoostingParams {
    fn default() -> Self {
        GradientBoostingParams { n_stages: 200, max_depth: 6, shrinkage: 0.1 }
    }
}

impl GradientBoostingParams {
    /// Named hyperparameter profiles mirroring the defaults of familiar
    /// boosting toolkits; the training engine is identical.
    pub fn preset(name: &str) -> Option<GradientBoostingParams> {
        let p = |n_stages, max_depth, shrinkage| GradientBoostingParams {
            n_stages,
            max_depth,
            shrinkage,
        };
        match name {
            "gbm" => Some(p(100, 3, 0.1)),
            "lgbm" => Some(p(200, 6, 0.1)),
            "histgb" => Some(p(100, 6, 0.1)),
            "xgboost" => Some(p(100, 6, 0.3)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegNode {
    Leaf { value: f64 },
    Split { feature: u32, gain: f64, absent: u32, present: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn predict(&self, row: &[u32]) -> f64 {
        let mut cur = 0usize;
        loop {
            match &self.nodes[cur] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split { feature, absent, present, .. } => {
                    cur = if row.binary_search(feature).is_ok() {
                        *present as usize
                    } else {
                        *absent as usize
                    };
                }
            }
        }
    }

    fn scale_leaves(&mut self, factor: f64) {
        for node in &mut self.nodes {
            if let RegNode::Leaf { value } = node {
                *value *= factor;
            }
        }
    }

    pub fn accumulate_gains(&self, into: &mut [f64]) {
        for node in &self.nodes {
            if let RegNode::Split { feature, gain, .. } = node {
                into[*feature as usize] += gain;
            }
        }
    }
}

const HESSIAN_EPS: f64 = 1e-12;

struct RegBuilder<'a> {
    rows: &'a [Vec<u32>],
    grad: &'a [f64],
    hess: &'a [f64],
    max_depth: u32,
    nodes: Vec<RegNode>,
    g_acc: Vec<f64>,
    h_acc: Vec<f64>,
    cnt: Vec<u32>,
    stamp: Vec<u32>,
    epoch: u32,
    touched: Vec<u32>,
}

impl<'a> RegBuilder<'a> {
    fn build(&mut self, idx: Vec<usize>, depth: u32) -> u32 {
        let g_tot: f64 = idx.iter().map(|&i| self.grad[i]).sum();
        let h_tot: f64 = idx.iter().map(|&i| self.hess[i]).sum();
        let leaf = |nodes: &mut Vec<RegNode>| {
            nodes.push(RegNode::Leaf { value: g_tot / (h_tot + HESSIAN_EPS) });
            (nodes.len() - 1) as u32
        };
        if depth >= self.max_depth || idx.len() < 2 {
            return leaf(&mut self.nodes);
        }

        self.epoch += 1;
        let epoch = self.epoch;
        self.touched.clear();
        for &i in &idx {
            for &c in &self.rows[i] {
                let c = c as usize;
                if self.stamp[c] != epoch {
                    self.stamp[c] = epoch;
                    self.g_acc[c] = 0.0;
                    self.h_acc[c] = 0.0;
                    self.cnt[c] = 0;
                    self.touched.push(c as u32);
                }
                self.g_acc[c] += self.grad[i];
                self.h_acc[c] += self.hess[i];
                self.cnt[c] += 1;
            }
        }
        self.touched.sort_unstable();

        let score = |g: f64, h: f64| g * g / (h + HESSIAN_EPS);
        let parent = score(g_tot, h_tot);
        let mut best_gain = 1e-12;
        let mut best = None;
        for &c in &self.touched {
            let k = self.cnt[c as usize] as usize;
            if k == 0 || k == idx.len() {
                continue;
            }
            let (g1, h1) = (self.g_acc[c as usize], self.h_acc[c as usize]);
            let gain = score(g1, h1) + score(g_tot - g1, h_tot - h1) - parent;
            if gain > best_gain {
                best_gain = gain;
                best = Some(c);
            }
        }
        let Some(feature) = best else {
            return leaf(&mut self.nodes);
        };

        let (mut absent, mut present) = (Vec::new(), Vec::new());
        for &i in &idx {
            if self.rows[i].binary_search(&feature).is_ok() {
                present.push(i);
            } else {
                absent.push(i);
            }
        }
        drop(idx);
        self.nodes.push(RegNode::Split { feature, gain: best_gain, absent: 0, present: 0 });
        let id = (self.nodes.len() - 1) as u32;
        let a = self.build(absent, depth + 1);
        let p = self.build(present, depth + 1);
        if let RegNode::Split { absent, present, .. } = &mut self.nodes[id as usize] {
            *absent = a;
            *present = p;
        }
        id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbModel {
    /// Initial score: log-odds of the training prior.
    pub f0: f64,
    pub trees: Vec<RegTree>,
}

#[derive(Debug, Clone)]
pub struct GbDiagnostics {
    /// Training log-loss after the prior and after each kept stage.
    pub stage_losses: Vec<f64>,
    pub halvings: usize,
    pub stopped_early: bool,
}

fn mean_logloss(labels: &[u8], scores: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&y, &f) in labels.iter().zip(scores) {
        let p = sigmoid(f).clamp(1e-15, 1.0 - 1e-15);
        total -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    total / labels.len() as f64
}

/// Stagewise logistic boosting. Each stage fits a regression tree to the
/// current gradients with Newton leaf values (shrinkage baked into the
/// leaves). A stage that would raise training loss has its leaves halved
/// up to ten times; if that still does not help, it is dropped and
/// training stops — so training loss is monotone non-increasing by
/// construction.
pub fn fit_gradient_boosting(
    rows: &[Vec<u32>],
    labels: &[u8],
    dim: usize,
    params: &GradientBoostingParams,
) -> Result<(GbModel, GbDiagnostics), ModelError> {
    if params.shrinkage <= 0.0 || params.shrinkage > 1.0 {
        return Err(ModelError::InvalidParameter(format!(
            "shrinkage must lie in (0, 1], got {}",
            params.shrinkage
        )));
    }
    let n = rows.len();
    let prior = (labels.iter().map(|&y| f64::from(y)).sum::<f64>() / n as f64)
        .clamp(1e-6, 1.0 - 1e-6);
    let f0 = (prior / (1.0 - prior)).ln();
    let mut scores = vec![f0; n];
    let mut prev_loss = mean_logloss(labels, &scores);
    let mut diag =
        GbDiagnostics { stage_losses: vec![prev_loss], halvings: 0, stopped_early: false };
    let mut trees = Vec::new();

    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for _ in 0..params.n_stages {
        for i in 0..n {
            let p = sigmoid(scores[i]);
            grad[i] = f64::from(labels[i]) - p;
            hess[i] = (p * (1.0 - p)).max(HESSIAN_EPS);
        }
        let mut builder = RegBuilder {
            rows,
            grad: &grad,
            hess: &hess,
            max_depth: params.max_depth,
            nodes: Vec::new(),
            g_acc: vec![0.0; dim],
            h_acc: vec![0.0; dim],
            cnt: vec![0; dim],
            stamp: vec![0; dim],
            epoch: 0,
            touched: Vec::new(),
        };
        builder.build((0..n).collect(), 0);
        let mut tree = RegTree { nodes: builder.nodes };
        tree.scale_leaves(params.shrinkage);

        let mut deltas: Vec<f64> = rows.iter().map(|r| tree.predict(r)).collect();
        let stage_loss = |scores: &[f64], deltas: &[f64]| {
            let cand: Vec<f64> = scores.iter().zip(deltas).map(|(s, d)| s + d).collect();
            mean_logloss(labels, &cand)
        };
        let mut loss = stage_loss(&scores, &deltas);
        let mut gave_up = false;
        let mut halvings_here = 0;
        while loss > prev_loss + 1e-12 {
            if halvings_here == 10 {
                gave_up = true;
                break;
            }
            tree.scale_leaves(0.5);
            for d in &mut deltas {
                *d *= 0.5;
            }
            halvings_here += 1;
            loss = stage_loss(&scores, &deltas);
        }
        if gave_up {
            diag.stopped_early = true;
            break;
        }
        diag.halvings += halvings_here;
        for (s, d) in scores.iter_mut().zip(&deltas) {
            *s += d;
        }
        prev_loss = loss;
        diag.stage_losses.push(loss);
        trees.push(tree);
    }
    Ok((GbModel { f0, trees }, diag))
}

impl GbModel {
    pub fn predict_proba(&self, row: &[u32]) -> f64 {
        let score = self.f0 + self.trees.iter().map(|t| t.predict(row)).sum::<f64>();
        sigmoid(score)
    }
}
