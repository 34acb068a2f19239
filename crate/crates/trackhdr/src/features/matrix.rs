//! Sparse binary feature matrices and their on-disk form.
//!
//! A row is the sorted set of vocabulary columns whose header (or an alias)
//! appears in the record — presence only, values discarded. The file format
//! is a one-line JSON header followed by one text line per row:
//!
//! ```text
//! {"v":1,"n":3,"d":120,"vocab_digest":"ab12..."}
//! 1 0 5 17
//! 0 2
//! 0
//! ```
//!
//! First field per line is the label (1 = tracker), the rest are column
//! indices. Rows with no known header are legal and stay all-zero.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::ingest::{Dataset, Label};

use super::vocab::HeaderVocabulary;
use super::FeatureError;

const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFeatureMatrix {
    pub n_rows: usize,
    pub dim: usize,
    /// Sorted, deduplicated column indices per row.
    pub rows: Vec<Vec<u32>>,
    /// 1 = tracker, 0 = non-tracker; parallel to `rows`.
    pub labels: Vec<u8>,
    /// Digest of the vocabulary the columns refer to.
    pub vocabulary_digest: String,
}

impl BinaryFeatureMatrix {
    /// Fraction of cells set.
    pub fn density(&self) -> f64 {
        if self.n_rows == 0 || self.dim == 0 {
            return 0.0;
        }
        let nnz: usize = self.rows.iter().map(Vec::len).sum();
        nnz as f64 / (self.n_rows as f64 * self.dim as f64)
    }

    /// (tracker, non-tracker) row counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let t = self.labels.iter().filter(|l| **l == 1).count();
        (t, self.labels.len() - t)
    }

    pub fn has_column(&self, row: usize, col: u32) -> bool {
        self.rows[row].binary_search(&col).is_ok()
    }

    fn validate(&self) -> Result<(), FeatureError> {
        if self.rows.len() != self.n_rows || self.labels.len() != self.n_rows {
            return Err(FeatureError::Parse(format!(
                "row/label counts ({}, {}) disagree with n = {}",
                self.rows.len(),
                self.labels.len(),
                self.n_rows
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.windows(2).all(|w| w[0] < w[1]) {
                return Err(FeatureError::Parse(format!("row {i}: indices not strictly increasing")));
            }
            if let Some(&last) = row.last() {
                if last as usize >= self.dim {
                    return Err(FeatureError::Parse(format!(
                        "row {i}: column {last} out of range (d = {})",
                        self.dim
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        self.validate()?;
        let file = std::fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(
            w,
            "{{\"v\":{},\"n\":{},\"d\":{},\"vocab_digest\":{}}}",
            SCHEMA_VERSION,
            self.n_rows,
            self.dim,
            serde_json::to_string(&self.vocabulary_digest).expect("string serialization"),
        )?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut line = label.to_string();
            for c in row {
                line.push(' ');
                line.push_str(&c.to_string());
            }
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut lines = reader.lines();
        let header_text = lines
            .next()
            .ok_or_else(|| FeatureError::Parse(format!("{}: empty file", path.display())))??;
        let header: serde_json::Value = serde_json::from_str(&header_text)
            .map_err(|e| FeatureError::Parse(format!("matrix header: {e}")))?;
        match header.get("v").and_then(|v| v.as_u64()) {
            Some(SCHEMA_VERSION) => {}
            other => {
                return Err(FeatureError::SchemaVersion {
                    found: other.map(|v| v.to_string()).unwrap_or_else(|| "missing".into()),
                })
            }
        }
        let n = header.get("n").and_then(|v| v.as_u64()).ok_or_else(|| {
            FeatureError::Parse("matrix header: missing n".into())
        })? as usize;
        let dim = header.get("d").and_then(|v| v.as_u64()).ok_or_else(|| {
            FeatureError::Parse("matrix header: missing d".into())
        })? as usize;
        let vocabulary_digest = header
            .get("vocab_digest")
            .and_then(|v| v.as_str())
            .ok_or_else(|| FeatureError::Parse("matrix header: missing vocab_digest".into()))?
            .to_string();

        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for (idx, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split(' ');
            let label: u8 = parts
                .next()
                .unwrap()
                .parse()
                .map_err(|e| FeatureError::Parse(format!("row {idx}: bad label: {e}")))?;
            if label > 1 {
                return Err(FeatureError::Parse(format!("row {idx}: label must be 0 or 1")));
            }
            let cols: Vec<u32> = parts
                .map(|p| p.parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|e| FeatureError::Parse(format!("row {idx}: bad column index: {e}")))?;
            labels.push(label);
            rows.push(cols);
        }
        if rows.len() != n {
            return Err(FeatureError::Parse(format!(
                "matrix declares {n} rows but carries {}",
                rows.len()
            )));
        }
        let mat = BinaryFeatureMatrix { n_rows: n, dim, rows, labels, vocabulary_digest };
        mat.validate()?;
        Ok(mat)
    }
}

/// Projects a labeled dataset onto a frozen vocabulary. Headers outside the
/// vocabulary are ignored, so records full of unseen headers binarize to
/// all-zero rows — by design: evaluation data must never grow the feature
/// space.
pub fn binarize(ds: &Dataset, vocab: &HeaderVocabulary) -> Result<BinaryFeatureMatrix, FeatureError> {
    if !ds.is_labeled() {
        return Err(FeatureError::Unlabeled("binarization needs labels for the matrix rows".into()));
    }
    let mut column: std::collections::HashMap<&str, u32> = std::collections::HashMap::new();
    for (j, name) in vocab.canonical.iter().enumerate() {
        column.insert(name.as_str(), j as u32);
    }
    for (alias, canon) in &vocab.alias_map {
        if let Some(&j) = column.get(canon.as_str()) {
            column.insert(alias.as_str(), j);
        }
    }
    let mut rows = Vec::with_capacity(ds.records.len());
    let mut labels = Vec::with_capacity(ds.records.len());
    for r in &ds.records {
        let mut cols: Vec<u32> = r
            .headers
            .iter()
            .filter_map(|(name, _)| column.get(name.as_str()).copied())
            .collect();
        cols.sort_unstable();
        cols.dedup();
        rows.push(cols);
        labels.push(u8::from(ds.label_of(r.record_id)? == Label::Tracker));
    }
    Ok(BinaryFeatureMatrix {
        n_rows: ds.records.len(),
        dim: vocab.dim(),
        rows,
        labels,
        vocabulary_digest: vocab.digest(),
    })
}
