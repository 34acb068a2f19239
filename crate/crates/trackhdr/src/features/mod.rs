//! Feature engineering: dataset splitting, header vocabulary reduction, and
//! sparse binarization.
//!
//! Order matters and is part of the contract: the dataset is split FIRST,
//! the vocabulary is built from the training split only, and calibration/
//! test records are then projected onto that frozen vocabulary. Headers
//! seen only outside the training split never become columns.

mod matrix;
mod strdist;
mod vocab;

pub use matrix::{binarize, BinaryFeatureMatrix};
pub use strdist::{damerau_levenshtein, hamming, name_similarity};
pub use vocab::{build_vocabulary, fuzzy_merge_headers, DropReason, HeaderVocabulary, VocabularyParams};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{Dataset, IngestError, Label};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("SchemaVersionError: unsupported schema version {found} (expected 1)")]
    SchemaVersion { found: String },
    #[error("UnlabeledDataset: {0}")]
    Unlabeled(String),
    #[error("EmptyTrainingSet: vocabulary construction needs at least one training record")]
    EmptyTrainingSet,
    #[error("InvalidFractions: {0}")]
    InvalidFractions(String),
    #[error("InsufficientClassCount: {0}")]
    InsufficientClassCount(String),
    #[error("InvalidWeights: {0}")]
    InvalidWeights(String),
    #[error("VocabularyDigestMismatch: expected {expected}, found {found}")]
    VocabularyDigestMismatch { expected: String, found: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Errors if a matrix was built against a different vocabulary.
pub fn verify_matrix_vocab(
    mat: &BinaryFeatureMatrix,
    vocab: &HeaderVocabulary,
) -> Result<(), FeatureError> {
    let expected = vocab.digest();
    if mat.vocabulary_digest != expected {
        return Err(FeatureError::VocabularyDigestMismatch {
            expected,
            found: mat.vocabulary_digest.clone(),
        });
    }
    Ok(())
}

/// Three-way split proportions plus the seed that fixes the assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub calib: f64,
    pub test: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train: f64, calib: f64, test: f64, seed: u64) -> Self {
        SplitSpec { train, calib, test, seed, stratified: true }
    }

    pub fn fractions(&self) -> [f64; 3] {
        [self.train, self.calib, self.test]
    }

    fn validate(&self) -> Result<(), FeatureError> {
        let fracs = self.fractions();
        if fracs.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(FeatureError::InvalidFractions(format!(
                "fractions must be finite and non-negative, got {fracs:?}"
            )));
        }
        let sum: f64 = fracs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(FeatureError::InvalidFractions(format!(
                "fractions must sum to 1, got {fracs:?} (sum {sum})"
            )));
        }
        if fracs.iter().all(|f| *f == 0.0) {
            return Err(FeatureError::InvalidFractions("all fractions are zero".into()));
        }
        Ok(())
    }
}

/// The three split datasets, in (train, calibration, test) order.
#[derive(Debug, Clone)]
pub struct SplitOutput {
    pub train: Dataset,
    pub calib: Dataset,
    pub test: Dataset,
}

/// Largest-remainder allocation of `n` items over three fractions: floor
/// the exact shares, then hand leftover items to the largest fractional
/// remainders (ties to the earlier split). Every count lands within one of
/// its exact share.
fn allocate(n: usize, fracs: [f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = fracs.iter().map(|f| f * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = e.floor() as usize;
    }
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for i in 0..(n - assigned) {
        counts[order[i % 3]] += 1;
    }
    counts
}

pub(crate) fn subset(ds: &Dataset, positions: &[usize]) -> Result<Dataset, FeatureError> {
    let records: Vec<_> = positions.iter().map(|&p| ds.records[p].clone()).collect();
    let labels = ds.label_map.as_ref().map(|m| {
        records.iter().map(|r| (r.record_id, m[&r.record_id])).collect()
    });
    Ok(Dataset::new(records, ds.provenance.clone(), labels)?)
}

/// Splits a dataset into train/calibration/test partitions.
///
/// Stratified mode shuffles each class separately (seeded, so identical
/// inputs give identical splits) and allocates by largest remainder, which
/// keeps every split's class proportions within one record per class of
/// the global proportions. Records keep their original relative order
/// inside each split; only membership is random.
pub fn split_dataset(ds: &Dataset, spec: &SplitSpec) -> Result<SplitOutput, FeatureError> {
    spec.validate()?;
    let fracs = spec.fractions();
    let requested = fracs.iter().filter(|f| **f > 0.0).count();

    let groups: Vec<Vec<usize>> = if spec.stratified {
        if !ds.is_labeled() {
            return Err(FeatureError::Unlabeled("stratified split needs labels".into()));
        }
        let mut tracker = Vec::new();
        let mut nontracker = Vec::new();
        for (pos, r) in ds.records.iter().enumerate() {
            match ds.label_map.as_ref().unwrap()[&r.record_id] {
                Label::Tracker => tracker.push(pos),
                Label::NonTracker => nontracker.push(pos),
            }
        }
        vec![tracker, nontracker]
    } else {
        vec![(0..ds.records.len()).collect()]
    };

    let mut split_positions: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (group_idx, group) in groups.iter().enumerate() {
        if group.len() < requested {
            return Err(FeatureError::InsufficientClassCount(format!(
                "group {group_idx} has {} records but {requested} non-empty splits were requested",
                group.len()
            )));
        }
        let mut shuffled = group.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(group_idx as u64);
        shuffled.shuffle(&mut rng);
        let counts = allocate(shuffled.len(), fracs);
        let mut offset = 0;
        for (s, &count) in counts.iter().enumerate() {
            split_positions[s].extend(&shuffled[offset..offset + count]);
            offset += count;
        }
    }
    for positions in &mut split_positions {
        positions.sort_unstable();
    }
    let [train_pos, calib_pos, test_pos] = split_positions;
    Ok(SplitOutput {
        train: subset(ds, &train_pos)?,
        calib: subset(ds, &calib_pos)?,
        test: subset(ds, &test_pos)?,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::ingest::{Direction, HttpMessageRecord, Provenance};

    fn dataset(n_tracker: usize, n_nontracker: usize) -> Dataset {
        let mut records = Vec::new();
        let mut labels = BTreeMap::new();
        for i in 0..(n_tracker + n_nontracker) {
            records.push(HttpMessageRecord {
                record_id: i as u64,
                direction: Direction::Response,
                remote_hostname: format!("h{i}.example"),
                url: format!("https://h{i}.example/"),
                headers: vec![("etag".into(), format!("v{i}"))],
                browser_tag: "test".into(),
                capture_timestamp: 0,
            });
            labels.insert(i as u64, if i < n_tracker { Label::Tracker } else { Label::NonTracker });
        }
        Dataset::new(records, Provenance::default(), Some(labels)).unwrap()
    }

    #[test]
    fn test_fraction_validation() {
        let ds = dataset(10, 10);
        for bad in [
            SplitSpec::new(0.5, 0.5, 0.2, 1),
            SplitSpec::new(-0.1, 0.9, 0.2, 1),
            SplitSpec::new(0.0, 0.0, 0.0, 1),
        ] {
            assert!(matches!(split_dataset(&ds, &bad), Err(FeatureError::InvalidFractions(_))));
        }
    }

    #[test]
    fn test_split_covers_and_is_disjoint() {
        let ds = dataset(30, 70);
        let out = split_dataset(&ds, &SplitSpec::new(0.7, 0.1, 0.2, 42)).unwrap();
        let mut all: Vec<u64> = out
            .train
            .records
            .iter()
            .chain(&out.calib.records)
            .chain(&out.test.records)
            .map(|r| r.record_id)
            .collect();
        all.sort_unstable();
        let expected: Vec<u64> = (0..100).collect();
        assert_eq!(all, expected);
        assert_eq!(out.train.records.len(), 70);
        assert_eq!(out.calib.records.len(), 10);
        assert_eq!(out.test.records.len(), 20);
    }

    #[test]
    fn test_stratification_within_one_record_per_class() {
        let ds = dataset(137, 363);
        let spec = SplitSpec::new(0.7, 0.1, 0.2, 7);
        let out = split_dataset(&ds, &spec).unwrap();
        for (part, frac) in [(&out.train, 0.7), (&out.calib, 0.1), (&out.test, 0.2)] {
            let (t, nt) = part.label_counts();
            assert!((t as f64 - 137.0 * frac).abs() <= 1.0, "tracker count off in {frac} split");
            assert!((nt as f64 - 363.0 * frac).abs() <= 1.0, "non-tracker count off in {frac} split");
        }
    }

    #[test]
    fn test_split_is_deterministic_and_seed_sensitive() {
        let ds = dataset(50, 50);
        let spec = SplitSpec::new(0.7, 0.1, 0.2, 42);
        let a = split_dataset(&ds, &spec).unwrap();
        let b = split_dataset(&ds, &spec).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.calib, b.calib);
        assert_eq!(a.test, b.test);
        let c = split_dataset(&ds, &SplitSpec::new(0.7, 0.1, 0.2, 43)).unwrap();
        assert_ne!(
            a.train.records.iter().map(|r| r.record_id).collect::<Vec<_>>(),
            c.train.records.iter().map(|r| r.record_id).collect::<Vec<_>>()
        );
    }

    #[test]
    fn test_records_keep_original_order_within_splits() {
        let ds = dataset(20, 20);
        let out = split_dataset(&ds, &SplitSpec::new(0.5, 0.25, 0.25, 3)).unwrap();
        for part in [&out.train, &out.calib, &out.test] {
            let ids: Vec<u64> = part.records.iter().map(|r| r.record_id).collect();
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            assert_eq!(ids, sorted);
        }
    }

    #[test]
    fn test_zero_fraction_split_is_empty() {
        let ds = dataset(10, 10);
        let out = split_dataset(&ds, &SplitSpec { train: 0.8, calib: 0.0, test: 0.2, seed: 1, stratified: true })
            .unwrap();
        assert!(out.calib.records.is_empty());
        assert_eq!(out.train.records.len() + out.test.records.len(), 20);
    }

    #[test]
    fn test_insufficient_class_count() {
        let ds = dataset(2, 50); // 2 trackers cannot fill 3 splits
        assert!(matches!(
            split_dataset(&ds, &SplitSpec::new(0.7, 0.1, 0.2, 1)),
            Err(FeatureError::InsufficientClassCount(_))
        ));
    }

    #[test]
    fn test_unstratified_split_allowed_without_labels() {
        let mut ds = dataset(5, 5);
        ds.label_map = None;
        let spec = SplitSpec { train: 0.6, calib: 0.2, test: 0.2, seed: 9, stratified: false };
        let out = split_dataset(&ds, &spec).unwrap();
        assert_eq!(out.train.records.len(), 6);
        assert!(matches!(
            split_dataset(&ds, &SplitSpec::new(0.6, 0.2, 0.2, 9)),
            Err(FeatureError::Unlabeled(_))
        ));
    }

    #[test]
    fn test_allocate_largest_remainder() {
        assert_eq!(allocate(10, [0.7, 0.1, 0.2]), [7, 1, 2]);
        // 7 * 0.7 = 4.9, 7 * 0.1 = 0.7, 7 * 0.2 = 1.4 -> floors 4,0,1 with
        // remainders .9, .7, .4 -> two leftovers go to train and calib.
        assert_eq!(allocate(7, [0.7, 0.1, 0.2]), [5, 1, 1]);
        assert_eq!(allocate(0, [0.7, 0.1, 0.2]), [0, 0, 0]);
    }
}
