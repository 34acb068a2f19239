//! CART-style decision trees over sparse binary feature rows.
//!
//! Splits are always "bit absent vs bit present", scored by weighted Gini
//! decrease, so the tree never needs thresholds. The weighted decrease is
//! stored on every split node; summing it per feature yields the classic
//! mean-decrease-impurity importance. Sample weights double as the
//! bootstrap mechanism for forests (a resample is just integer weights),
//! which keeps tree construction itself allocation-light and exact.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which features a node may split on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Every feature with variation inside the node.
    All,
    /// ceil(sqrt(d)) features sampled per node without replacement.
    SqrtSampled,
}

/// How to resolve candidate splits with identical gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    LowestIndex,
    /// Uniform pick among the tied best; this is what distinguishes
    /// extremely randomized trees from bagged ones here, since binary
    /// features leave no threshold to randomize.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<u32>,
    pub min_samples_split: usize,
    /// Smallest weighted Gini decrease a split must reach. At the default
    /// of zero an impure node splits on any feature with variation, even
    /// when the immediate gain is nil — required for interactions like
    /// xor, where no single feature helps by itself.
    pub min_gain: f64,
    pub feature_mode: FeatureMode,
    pub tie_break: TieBreak,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_gain: 0.0,
            feature_mode: FeatureMode::All,
            tie_break: TieBreak::LowestIndex,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        /// Weighted fraction of tracker rows that reached this leaf.
        prob: f64,
    },
    Split {
        feature: u32,
        /// Weighted Gini decrease achieved by this split (unnormalized).
        gain: f64,
        absent: u32,
        present: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub dim: u32,
    /// Arena of nodes; index 0 is the root.
    pub nodes: Vec<Node>,
}

/// Gini impurity of a weighted node, times nothing — callers weight it.
fn gini(pos: f64, tot: f64) -> f64 {
    let q = pos / tot;
    2.0 * q * (1.0 - q)
}

struct Builder<'a> {
    rows: &'a [Vec<u32>],
    labels: &'a [u8],
    weights: Option<&'a [f64]>,
    dim: usize,
    params: &'a TreeParams,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
    // Per-feature accumulators, epoch-stamped so resetting between nodes
    // costs only the features actually touched.
    tot: Vec<f64>,
    pos: Vec<f64>,
    stamp: Vec<u32>,
    allowed: Vec<u32>,
    epoch: u32,
    touched: Vec<u32>,
    ties: Vec<u32>,
}

impl<'a> Builder<'a> {
    fn weight(&self, i: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[i])
    }

    fn build(&mut self, idx: Vec<usize>, depth: u32) -> u32 {
        let mut w_tot = 0.0;
        let mut w_pos = 0.0;
        for &i in &idx {
            let w = self.weight(i);
            w_tot += w;
            w_pos += w * f64::from(self.labels[i]);
        }
        let prob = w_pos / w_tot;

        let depth_capped = self.params.max_depth.is_some_and(|m| depth >= m);
        if depth_capped
            || idx.len() < self.params.min_samples_split
            || w_pos == 0.0
            || w_pos == w_tot
        {
            return self.push(Node::Leaf { prob });
        }

        match self.best_split(&idx, w_tot, w_pos) {
            None => self.push(Node::Leaf { prob }),
            Some((feature, gain)) => {
                let (mut absent, mut present) = (Vec::new(), Vec::new());
                for &i in &idx {
                    if self.rows[i].binary_search(&feature).is_ok() {
                        present.push(i);
                    } else {
                        absent.push(i);
                    }
                }
                drop(idx);
                let id = self.push(Node::Split { feature, gain, absent: 0, present: 0 });
                let a = self.build(absent, depth + 1);
                let p = self.build(present, depth + 1);
                if let Node::Split { absent, present, .. } = &mut self.nodes[id as usize] {
                    *absent = a;
                    *present = p;
                }
                id
            }
        }
    }

    fn best_split(&mut self, idx: &[usize], w_tot: f64, w_pos: f64) -> Option<(u32, f64)> {
        self.epoch += 1;
        let epoch = self.epoch;
        self.touched.clear();

        let restricted = self.params.feature_mode == FeatureMode::SqrtSampled;
        if restricted {
            let d_sub = (self.dim as f64).sqrt().ceil() as usize;
            for f in rand::seq::index::sample(self.rng, self.dim, d_sub.min(self.dim)) {
                self.allowed[f] = epoch;
            }
        }

        for &i in idx {
            let w = self.weight(i);
            let wp = w * f64::from(self.labels[i]);
            for &c in &self.rows[i] {
                let c = c as usize;
                if restricted && self.allowed[c] != epoch {
                    continue;
                }
                if self.stamp[c] != epoch {
                    self.stamp[c] = epoch;
                    self.tot[c] = 0.0;
                    self.pos[c] = 0.0;
                    self.touched.push(c as u32);
                }
                self.tot[c] += w;
                self.pos[c] += wp;
            }
        }
        self.touched.sort_unstable();

        let parent = w_tot * gini(w_pos, w_tot);
        let mut best_gain = f64::NEG_INFINITY;
        let mut best_feature = None;
        for &c in &self.touched {
            let w1 = self.tot[c as usize];
            if w1 <= 0.0 || w1 >= w_tot {
                continue;
            }
            let p1 = self.pos[c as usize];
            let (w0, p0) = (w_tot - w1, w_pos - p1);
            let gain = parent - w1 * gini(p1, w1) - w0 * gini(p0, w0);
            if gain >= self.params.min_gain && gain > best_gain {
                best_gain = gain;
                best_feature = Some(c);
            }
        }
        let feature = best_feature?;

        if self.params.tie_break == TieBreak::Random {
            self.ties.clear();
            for &c in &self.touched {
                let w1 = self.tot[c as usize];
                if w1 <= 0.0 || w1 >= w_tot {
                    continue;
                }
                let p1 = self.pos[c as usize];
                let (w0, p0) = (w_tot - w1, w_pos - p1);
                let gain = parent - w1 * gini(p1, w1) - w0 * gini(p0, w0);
                if (gain - best_gain).abs() <= 1e-12 {
                    self.ties.push(c);
                }
            }
            let pick = self.ties[self.rng.gen_range(0..self.ties.len())];
            return Some((pick, best_gain));
        }
        Some((feature, best_gain))
    }

    fn push(&mut self, node: Node) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }
}

impl DecisionTree {
    /// Grows a tree on the rows whose weight is positive. `weights` of
    /// `None` means unit weights; forests pass bootstrap draw counts.
    pub fn fit(
        rows: &[Vec<u32>],
        labels: &[u8],
        weights: Option<&[f64]>,
        dim: usize,
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> DecisionTree {
        assert_eq!(rows.len(), labels.len());
        let idx: Vec<usize> = match weights {
            Some(w) => {
                assert_eq!(w.len(), rows.len());
                (0..rows.len()).filter(|&i| w[i] > 0.0).collect()
            }
            None => (0..rows.len()).collect(),
        };
        assert!(!idx.is_empty(), "cannot fit a tree on zero effective rows");

        let mut builder = Builder {
            rows,
            labels,
            weights,
            dim,
            params,
            rng,
            nodes: Vec::new(),
            tot: vec![0.0; dim],
            pos: vec![0.0; dim],
            stamp: vec![0; dim],
            allowed: vec![0; dim],
            epoch: 0,
            touched: Vec::new(),
            ties: Vec::new(),
        };
        let root = builder.build(idx, 0);
        debug_assert_eq!(root, 0);
        DecisionTree { dim: dim as u32, nodes: builder.nodes }
    }

    /// Probability that the row is a tracker, per the leaf it lands in.
    pub fn predict_proba(&self, row: &[u32]) -> f64 {
        let mut cur = 0usize;
        loop {
            match &self.nodes[cur] {
                Node::Leaf { prob } => return *prob,
                Node::Split { feature, absent, present, .. } => {
                    cur = if row.binary_search(feature).is_ok() {
                        *present as usize
                    } else {
                        *absent as usize
                    };
                }
            }
        }
    }

    /// Adds each split's stored Gini decrease to `into[feature]`.
    pub fn accumulate_gains(&self, into: &mut [f64]) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = node {
                into[*feature as usize] += gain;
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> u32 {
        fn walk(nodes: &[Node], at: usize) -> u32 {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { absent, present, .. } => {
                    1 + walk(nodes, *absent as usize).max(walk(nodes, *present as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}
