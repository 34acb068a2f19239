//! Header vocabulary construction: the reduction pipeline that turns the
//! thousands of header names observed in a training split into a compact,
//! ordered list of canonical feature columns.
//!
//! Filters run in a fixed order — each header is attributed to the first
//! filter that removes it:
//!
//! 1. low variance: the header's value never varies (a single observed
//!    value carries no signal once presence is binarized);
//! 2. missing ratio: present in fewer than `min_presence_rate` of records;
//! 3. single label: observed under only one class;
//! 4. fuzzy merge: surviving names that are near-duplicates by weighted
//!    Damerau-Levenshtein/Hamming similarity AND share values (Jaccard over
//!    value sets) collapse into one column. Merging is transitive via
//!    union-find; the most frequent member becomes canonical. The
//!    single-label check is re-applied to merged columns.
//!
//! The vocabulary is built from the training split only. Anything else
//! would leak evaluation data into feature selection.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::ingest::{Dataset, Label};
use crate::util::sha256_hex;

use super::strdist::name_similarity;
use super::FeatureError;

/// Thresholds for the vocabulary pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabularyParams {
    /// Filter 2: headers present in fewer than this fraction of training
    /// records are dropped.
    pub min_presence_rate: f64,
    /// Weight of the Damerau-Levenshtein term in name similarity.
    pub w_dl: f64,
    /// Weight of the Hamming term (equal-length names only).
    pub w_h: f64,
    /// Minimum name similarity for a merge.
    pub tau_name: f64,
    /// Minimum Jaccard similarity of observed value sets for a merge.
    pub tau_value: f64,
}

impl Default for VocabularyParams {
    fn default() -> Self {
        // Deliberately conservative merge thresholds: at tau_name = 0.88
        // only near-identical names (roughly one edit in a 14-char name)
        // merge, so no legitimate pair of distinct headers is ever fused.
        VocabularyParams { min_presence_rate: 1e-4, w_dl: 0.7, w_h: 0.3, tau_name: 0.88, tau_value: 0.5 }
    }
}

/// Why a training header did not become a feature column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    LowVariance,
    MissingRatio,
    SingleLabel,
    /// Member of a merged group whose column was subsequently dropped.
    MergedInto(String),
}

/// The frozen feature dictionary: canonical column names in column order,
/// alias resolution for merged names, and an audit trail of drops. Every
/// header observed in the training split appears in exactly one of
/// `canonical`, `alias_map` keys, or `dropped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaderVocabulary {
    /// Column names, ordered by descending training presence (ties
    /// lexicographic). Column `j` of every matrix built from this
    /// vocabulary means "record carries `canonical[j]` (or an alias)".
    pub canonical: Vec<String>,
    /// Observed name -> canonical column name, for fuzzy-merged aliases.
    pub alias_map: BTreeMap<String, String>,
    pub dropped: BTreeMap<String, DropReason>,
    pub thresholds: VocabularyParams,
    /// Content digest of the training dataset this was built from.
    pub train_digest: String,
}

impl HeaderVocabulary {
    /// Digest over the parts that determine binarization (columns and
    /// aliases). Matrices and models carry this to prove compatibility.
    pub fn digest(&self) -> String {
        let payload = serde_json::to_vec(&(&self.canonical, &self.alias_map))
            .expect("vocabulary serialization cannot fail");
        sha256_hex(&payload)
    }

    /// Column index a header name maps to, if any.
    pub fn column_of(&self, name: &str) -> Option<usize> {
        let canonical = self.alias_map.get(name).map(String::as_str).unwrap_or(name);
        self.canonical.iter().position(|c| c == canonical)
    }

    pub fn dim(&self) -> usize {
        self.canonical.len()
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), FeatureError> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| FeatureError::Parse(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, FeatureError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| FeatureError::Parse(e.to_string()))
    }
}

/// Per-name statistics from one pass over the training records.
struct NameStats {
    /// Records containing the name at least once.
    presence: usize,
    tracker_presence: usize,
    nontracker_presence: usize,
    values: BTreeSet<String>,
}

/// Transitive fuzzy merge over header names.
///
/// Two names merge when their weighted name similarity reaches
/// `params.tau_name` AND the Jaccard similarity of their observed value
/// sets reaches `params.tau_value`. Groups are closed transitively; within
/// each group the most frequent name (`freqs`, ties broken by lexicographic
/// minimum) becomes canonical. Returns alias -> canonical (canonicals
/// themselves are not keys).
pub fn fuzzy_merge_headers(
    names: &[String],
    value_sets: &BTreeMap<String, BTreeSet<String>>,
    freqs: &BTreeMap<String, usize>,
    params: &VocabularyParams,
) -> Result<BTreeMap<String, String>, FeatureError> {
    validate_merge_params(params)?;
    let chars: Vec<Vec<char>> = names.iter().map(|n| n.chars().collect()).collect();
    let mut uf = UnionFind::new(names.len());
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            let (a, b) = (&chars[i], &chars[j]);
            let max_len = a.len().max(b.len());
            if max_len == 0 {
                continue;
            }
            // Cheap upper bound: DL >= length difference, and the Hamming
            // term vanishes for unequal lengths.
            let len_gap = a.len().abs_diff(b.len()) as f64 / max_len as f64;
            let bound = params.w_dl * (1.0 - len_gap)
                + if a.len() == b.len() { params.w_h } else { 0.0 };
            if bound < params.tau_name {
                continue;
            }
            if name_similarity(a, b, params.w_dl, params.w_h) < params.tau_name {
                continue;
            }
            let jac = jaccard(&value_sets[&names[i]], &value_sets[&names[j]]);
            if jac >= params.tau_value {
                uf.union(i, j);
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..names.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut aliases = BTreeMap::new();
    for members in groups.values() {
        if members.len() < 2 {
            continue;
        }
        let canonical = members
            .iter()
            .map(|&i| &names[i])
            .max_by(|a, b| {
                freqs[*a].cmp(&freqs[*b]).then_with(|| b.cmp(a)) // ties: lexicographic min
            })
            .expect("non-empty group");
        for &i in members {
            if &names[i] != canonical {
                aliases.insert(names[i].clone(), canonical.clone());
            }
        }
    }
    Ok(aliases)
}

fn validate_merge_params(params: &VocabularyParams) -> Result<(), FeatureError> {
    if params.w_dl < 0.0 || params.w_h < 0.0 || (params.w_dl + params.w_h - 1.0).abs() > 1e-9 {
        return Err(FeatureError::InvalidWeights(format!(
            "similarity weights must be non-negative and sum to 1 (got {} + {})",
            params.w_dl, params.w_h
        )));
    }
    for (name, v) in [("tau_name", params.tau_name), ("tau_value", params.tau_value)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(FeatureError::InvalidWeights(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    Ok(())
}

fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Deterministic: smaller index becomes the root.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Runs the full reduction pipeline over a labeled training split.
pub fn build_vocabulary(
    train: &Dataset,
    params: &VocabularyParams,
) -> Result<HeaderVocabulary, FeatureError> {
    if train.records.is_empty() {
        return Err(FeatureError::EmptyTrainingSet);
    }
    if !train.is_labeled() {
        return Err(FeatureError::Unlabeled("vocabulary needs a labeled training split".into()));
    }
    validate_merge_params(params)?;
    let n = train.records.len();

    // One pass: presence counts (per record, per label) and value sets.
    let mut stats: BTreeMap<&str, NameStats> = BTreeMap::new();
    for r in &train.records {
        let is_tracker = train
            .label_map
            .as_ref()
            .map(|m| m[&r.record_id] == Label::Tracker)
            .unwrap_or(false);
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for (name, value) in &r.headers {
            let entry = stats.entry(name.as_str()).or_insert_with(|| NameStats {
                presence: 0,
                tracker_presence: 0,
                nontracker_presence: 0,
                values: BTreeSet::new(),
            });
            entry.values.insert(value.clone());
            if seen.insert(name.as_str()) {
                entry.presence += 1;
                if is_tracker {
                    entry.tracker_presence += 1;
                } else {
                    entry.nontracker_presence += 1;
                }
            }
        }
    }

    let mut dropped: BTreeMap<String, DropReason> = BTreeMap::new();
    let mut survivors: Vec<String> = Vec::new();
    for (name, s) in &stats {
        let reason = if s.values.len() == 1 {
            Some(DropReason::LowVariance)
        } else if (s.presence as f64 / n as f64) < params.min_presence_rate {
            Some(DropReason::MissingRatio)
        } else if s.tracker_presence == 0 || s.nontracker_presence == 0 {
            Some(DropReason::SingleLabel)
        } else {
            None
        };
        match reason {
            Some(r) => {
                dropped.insert(name.to_string(), r);
            }
            None => survivors.push(name.to_string()),
        }
    }

    let value_sets: BTreeMap<String, BTreeSet<String>> =
        survivors.iter().map(|n| (n.clone(), stats[n.as_str()].values.clone())).collect();
    let freqs: BTreeMap<String, usize> =
        survivors.iter().map(|n| (n.clone(), stats[n.as_str()].presence)).collect();
    let mut alias_map = fuzzy_merge_headers(&survivors, &value_sets, &freqs, params)?;

    // Merged-column statistics: presence of "canonical or any alias".
    let canonical_of = |name: &str| -> String {
        alias_map.get(name).cloned().unwrap_or_else(|| name.to_string())
    };
    let survivor_set: BTreeSet<&str> = survivors.iter().map(String::as_str).collect();
    let mut col_presence: HashMap<String, usize> = HashMap::new();
    let mut col_t: HashMap<String, usize> = HashMap::new();
    let mut col_nt: HashMap<String, usize> = HashMap::new();
    for r in &train.records {
        let is_tracker = train.label_map.as_ref().map(|m| m[&r.record_id] == Label::Tracker).unwrap();
        let mut cols: BTreeSet<String> = BTreeSet::new();
        for (name, _) in &r.headers {
            if survivor_set.contains(name.as_str()) {
                cols.insert(canonical_of(name));
            }
        }
        for c in cols {
            *col_presence.entry(c.clone()).or_default() += 1;
            if is_tracker {
                *col_t.entry(c).or_default() += 1;
            } else {
                *col_nt.entry(c).or_default() += 1;
            }
        }
    }

    // Re-check the single-label filter on merged columns. (With merging
    // applied last this can only fire if a future reorder makes it live,
    // but the contract is explicit about re-checking.)
    let mut canonical: Vec<String> = Vec::new();
    for name in &survivors {
        if alias_map.contains_key(name) {
            continue; // alias, not a column
        }
        let t = col_t.get(name).copied().unwrap_or(0);
        let nt = col_nt.get(name).copied().unwrap_or(0);
        if t == 0 || nt == 0 {
            dropped.insert(name.clone(), DropReason::SingleLabel);
        } else {
            canonical.push(name.clone());
        }
    }
    // Aliases of a column that was re-dropped move to `dropped` too.
    let dead_aliases: Vec<(String, String)> = alias_map
        .iter()
        .filter(|(_, canon)| dropped.contains_key(*canon))
        .map(|(a, c)| (a.clone(), c.clone()))
        .collect();
    for (alias, canon) in dead_aliases {
        alias_map.remove(&alias);
        dropped.insert(alias, DropReason::MergedInto(canon));
    }

    // Column order: descending merged presence, ties lexicographic.
    canonical.sort_by(|a, b| col_presence[b].cmp(&col_presence[a]).then_with(|| a.cmp(b)));

    let vocab = HeaderVocabulary {
        canonical,
        alias_map,
        dropped,
        thresholds: *params,
        train_digest: train.provenance.content_digest.clone(),
    };
    debug_assert!(partition_holds(&stats, &vocab));
    Ok(vocab)
}

/// Every observed training header lands in exactly one of canonical /
/// alias keys / dropped.
fn partition_holds(stats: &BTreeMap<&str, NameStats>, vocab: &HeaderVocabulary) -> bool {
    stats.keys().all(|name| {
        let in_canonical = vocab.canonical.iter().any(|c| c == name);
        let in_alias = vocab.alias_map.contains_key(*name);
        let in_dropped = vocab.dropped.contains_key(*name);
        usize::from(in_canonical) + usize::from(in_alias) + usize::from(in_dropped) == 1
    })
}
