//! Capture ingestion: HTTP request/response records, datasets, and the
//! canonical on-disk form.
//!
//! A [`Dataset`] is a flat list of [`HttpMessageRecord`]s from one browser
//! crawl plus provenance. All records in a dataset share one direction —
//! request and response streams are separate views and never mixed, because
//! downstream features are built from exactly one header stream.
//!
//! Labels are carried in a side map keyed by record id so that an unlabeled
//! capture and its labeled twin share the same record bytes.

mod jsonl;
mod profile;
mod tex;

pub use jsonl::{load_dataset, persist_dataset};
pub use profile::{header_overlap, profile_dataset, LabelCounts, ProfileReport, Quartiles, ValueSummary};
pub use tex::parse_tex_capture;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::util::sha256_hex;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("SchemaVersionError: unsupported schema version {found} (expected 1)")]
    SchemaVersion { found: String },
    #[error("ContentDigestMismatch: stored {stored} but records hash to {actual}")]
    ContentDigestMismatch { stored: String, actual: String },
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("InvalidRecord: {0}")]
    InvalidRecord(String),
    #[error("UnlabeledDataset: {0}")]
    Unlabeled(String),
}

/// Which half of the HTTP exchange a record's headers came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "req")]
    Request,
    #[serde(rename = "res")]
    Response,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Request => write!(f, "req"),
            Direction::Response => write!(f, "res"),
        }
    }
}

/// Tracker / non-tracker ground truth for one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "T")]
    Tracker,
    #[serde(rename = "NT")]
    NonTracker,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Tracker => "T",
            Label::NonTracker => "NT",
        }
    }
}

/// One captured HTTP message (request or response), reduced to what the
/// pipeline consumes.
///
/// Header names are normalized to lowercase at ingestion; order and
/// duplicates are preserved as captured. `remote_hostname` is the URL
/// authority, lowercased, port stripped; IP literals are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpMessageRecord {
    pub record_id: u64,
    pub direction: Direction,
    pub remote_hostname: String,
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub browser_tag: String,
    pub capture_timestamp: i64,
}

/// Where a dataset came from and what has been done to it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_paths: Vec<String>,
    pub browser_tag: String,
    pub crawl_date: Option<String>,
    /// SHA-256 over the canonical serialization of all records (labels
    /// excluded), so a capture and its labeled twin share a digest.
    pub content_digest: String,
    /// Hostname substrings removed via [`filter_hosts`]; empty if none.
    pub host_exclusions: Vec<String>,
    /// Digest of the filter-list set that produced `label_map`, if labeled.
    pub filter_digest: Option<String>,
    /// Basename of the run manifest that wrote this file, if any.
    pub manifest: Option<String>,
}

/// A single-direction collection of HTTP message records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<HttpMessageRecord>,
    pub provenance: Provenance,
    /// Present iff the dataset is labeled; then it covers every record id
    /// exactly once.
    pub label_map: Option<BTreeMap<u64, Label>>,
}

impl Dataset {
    /// Builds a dataset and enforces the structural invariants.
    pub fn new(
        records: Vec<HttpMessageRecord>,
        mut provenance: Provenance,
        label_map: Option<BTreeMap<u64, Label>>,
    ) -> Result<Self, IngestError> {
        provenance.content_digest = content_digest(&records);
        let ds = Dataset { records, provenance, label_map };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks record-id uniqueness, hostname normalization, single
    /// direction, and label coverage. Cheap relative to ingestion.
    pub fn validate(&self) -> Result<(), IngestError> {
        let mut seen = BTreeSet::new();
        let mut direction = None;
        for r in &self.records {
            if !seen.insert(r.record_id) {
                return Err(IngestError::InvalidRecord(format!(
                    "duplicate record_id {}",
                    r.record_id
                )));
            }
            match direction {
                None => direction = Some(r.direction),
                Some(d) if d != r.direction => {
                    return Err(IngestError::InvalidRecord(format!(
                        "mixed directions in one dataset (record {})",
                        r.record_id
                    )))
                }
                _ => {}
            }
            validate_hostname(&r.remote_hostname)
                .map_err(|e| IngestError::InvalidRecord(format!("record {}: {e}", r.record_id)))?;
            for (name, _) in &r.headers {
                if name.chars().any(|c| c.is_ascii_uppercase()) {
                    return Err(IngestError::InvalidRecord(format!(
                        "record {}: header name {name:?} not lowercased",
                        r.record_id
                    )));
                }
            }
        }
        if let Some(labels) = &self.label_map {
            if labels.len() != self.records.len() {
                return Err(IngestError::InvalidRecord(format!(
                    "label map covers {} records, dataset has {}",
                    labels.len(),
                    self.records.len()
                )));
            }
            for r in &self.records {
                if !labels.contains_key(&r.record_id) {
                    return Err(IngestError::InvalidRecord(format!(
                        "record {} missing from label map",
                        r.record_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_labeled(&self) -> bool {
        self.label_map.is_some()
    }

    /// Label of a record, or an error if the dataset is unlabeled.
    pub fn label_of(&self, record_id: u64) -> Result<Label, IngestError> {
        self.label_map
            .as_ref()
            .and_then(|m| m.get(&record_id).copied())
            .ok_or_else(|| IngestError::Unlabeled(format!("record {record_id} has no label")))
    }

    /// Per-label record counts `(trackers, non_trackers)`; (0, 0) when
    /// unlabeled.
    pub fn label_counts(&self) -> (usize, usize) {
        match &self.label_map {
            None => (0, 0),
            Some(m) => {
                let t = m.values().filter(|l| **l == Label::Tracker).count();
                (t, m.len() - t)
            }
        }
    }
}

/// Basic shape check for a normalized hostname: non-empty, lowercase, no
/// scheme/path/whitespace. IPv6 literals keep their brackets.
pub fn validate_hostname(host: &str) -> Result<(), IngestError> {
    if host.is_empty() {
        return Err(IngestError::InvalidRecord("empty hostname".into()));
    }
    if host.contains('/') || host.contains(char::is_whitespace) {
        return Err(IngestError::InvalidRecord(format!(
            "hostname {host:?} contains path or whitespace"
        )));
    }
    if host.chars().any(|c| c.is_ascii_uppercase()) {
        return Err(IngestError::InvalidRecord(format!("hostname {host:?} not lowercased")));
    }
    Ok(())
}

/// Extracts the lowercased authority (no port, no userinfo) from a URL.
pub fn hostname_from_url(raw: &str) -> Result<String, IngestError> {
    let parsed = url::Url::parse(raw)
        .map_err(|e| IngestError::InvalidRecord(format!("unparseable url {raw:?}: {e}")))?;
    match parsed.host_str() {
        Some(h) if !h.is_empty() => Ok(h.to_ascii_lowercase()),
        _ => Err(IngestError::InvalidRecord(format!("url {raw:?} has no host"))),
    }
}

/// Canonical digest over the record stream (labels excluded).
pub fn content_digest(records: &[HttpMessageRecord]) -> String {
    let mut buf = Vec::new();
    for r in records {
        buf.extend_from_slice(jsonl::record_line(r, None).as_bytes());
        buf.push(b'\n');
    }
    sha256_hex(&buf)
}

/// Counts of records dropped during ingestion, by reason. Skipping is a
/// diagnostic, not an error: single malformed entries inside a well-formed
/// capture never abort the run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub not_an_object: usize,
    pub missing_url: usize,
    pub bad_url: usize,
    pub other_direction: usize,
    pub bad_headers: usize,
}

impl SkipCounts {
    pub fn total(&self) -> usize {
        self.not_an_object + self.missing_url + self.bad_url + self.other_direction + self.bad_headers
    }
}

/// Result of ingesting one capture file: the dataset plus skip diagnostics.
#[derive(Debug)]
pub struct IngestOutcome {
    pub dataset: Dataset,
    pub skipped: SkipCounts,
}

/// Source formats understood by [`ingest_capture`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureFormat {
    /// Raw browser-extension export: a JSON array (or an object of arrays)
    /// of webRequest events.
    TexJson,
    /// The canonical JSONL form written by [`persist_dataset`].
    CanonicalJsonl,
}

impl std::str::FromStr for CaptureFormat {
    type Err = IngestError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tex_json" => Ok(CaptureFormat::TexJson),
            "canonical_jsonl" => Ok(CaptureFormat::CanonicalJsonl),
            other => Err(IngestError::InvalidArgument(format!(
                "unknown capture format {other:?} (expected tex_json or canonical_jsonl)"
            ))),
        }
    }
}

/// Reads one capture file into a dataset.
///
/// For `TexJson`, `direction` selects which header stream is kept (entries
/// carrying only the other stream are skipped and counted) and
/// `browser_tag` stamps every record. For `CanonicalJsonl` both are taken
/// from the file itself; a `direction` argument that contradicts the file
/// is an error.
pub fn ingest_capture(
    path: &Path,
    format: CaptureFormat,
    direction: Direction,
    browser_tag: &str,
) -> Result<IngestOutcome, IngestError> {
    match format {
        CaptureFormat::TexJson => {
            let text = std::fs::read_to_string(path)?;
            parse_tex_capture(&text, direction, browser_tag, &path.display().to_string())
        }
        CaptureFormat::CanonicalJsonl => {
            let dataset = load_dataset(path)?;
            if let Some(first) = dataset.records.first() {
                if first.direction != direction {
                    return Err(IngestError::InvalidArgument(format!(
                        "dataset {} holds {} records but {} was requested",
                        path.display(),
                        first.direction,
                        direction
                    )));
                }
            }
            Ok(IngestOutcome { dataset, skipped: SkipCounts::default() })
        }
    }
}

/// Concatenates datasets (already sorted by the caller in source order),
/// reassigning record ids sequentially. Labels survive only if every input
/// is labeled.
pub fn concat_datasets(parts: Vec<Dataset>) -> Result<Dataset, IngestError> {
    if parts.is_empty() {
        return Err(IngestError::InvalidArgument("no datasets to concatenate".into()));
    }
    let all_labeled = parts.iter().all(|d| d.is_labeled());
    let mut records = Vec::new();
    let mut labels = BTreeMap::new();
    let mut prov = Provenance {
        browser_tag: parts[0].provenance.browser_tag.clone(),
        crawl_date: parts[0].provenance.crawl_date.clone(),
        ..Default::default()
    };
    let mut next_id = 0u64;
    for part in parts {
        let Dataset { records: part_records, provenance: part_prov, label_map } = part;
        prov.source_paths.extend(part_prov.source_paths);
        for sub in part_prov.host_exclusions {
            if !prov.host_exclusions.contains(&sub) {
                prov.host_exclusions.push(sub);
            }
        }
        for mut r in part_records {
            let old = r.record_id;
            r.record_id = next_id;
            if all_labeled {
                let l = label_map
                    .as_ref()
                    .and_then(|m| m.get(&old))
                    .copied()
                    .ok_or_else(|| IngestError::Unlabeled(format!("record {old} unlabeled")))?;
                labels.insert(next_id, l);
            }
            records.push(r);
            next_id += 1;
        }
    }
    Dataset::new(records, prov, if all_labeled { Some(labels) } else { None })
}

/// Drops every record whose hostname contains any of the given substrings
/// (case-insensitive). Useful for ablations that remove whole tracker
/// families. Record ids are preserved; provenance records the exclusions.
pub fn filter_hosts(ds: &Dataset, exclude_substrings: &[String]) -> Result<Dataset, IngestError> {
    for sub in exclude_substrings {
        if sub.is_empty() {
            return Err(IngestError::InvalidArgument("empty host-exclusion substring".into()));
        }
    }
    let needles: Vec<String> = exclude_substrings.iter().map(|s| s.to_ascii_lowercase()).collect();
    let records: Vec<HttpMessageRecord> = ds
        .records
        .iter()
        .filter(|r| !needles.iter().any(|n| r.remote_hostname.contains(n.as_str())))
        .cloned()
        .collect();
    let label_map = ds.label_map.as_ref().map(|m| {
        records.iter().map(|r| (r.record_id, m[&r.record_id])).collect::<BTreeMap<_, _>>()
    });
    let mut prov = ds.provenance.clone();
    for sub in exclude_substrings {
        if !prov.host_exclusions.contains(sub) {
            prov.host_exclusions.push(sub.clone());
        }
    }
    Dataset::new(records, prov, label_map)
}
