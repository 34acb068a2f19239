//! Descriptive statistics over a labeled dataset: class balance, header
//! counts and frequencies, per-header value distributions, and header-name
//! overlap between datasets. These are the sanity checks run before any
//! feature engineering; tracker responses tend to carry fewer, shorter
//! headers than benign ones and the profile makes that visible.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::util::quartiles;

use super::{Dataset, IngestError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

/// Distribution of one header's values, where they parse as decimal
/// integers. Unparseable occurrences are counted, not dropped silently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueSummary {
    pub per_label: BTreeMap<String, Quartiles>,
    pub parsed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    /// Keyed "T"/"NT"; fractions sum to 1.
    pub responses_per_label: BTreeMap<String, LabelCounts>,
    /// Number of distinct header names observed under each label.
    pub unique_headers_per_label: BTreeMap<String, usize>,
    /// (Q1, median, Q3) of distinct-header-names-per-record, per label.
    pub headers_per_record_quartiles: BTreeMap<String, Quartiles>,
    /// For each header name, in how many records it appears at least once.
    pub header_frequency: BTreeMap<String, usize>,
    /// Numeric value distributions for explicitly requested headers.
    pub value_summaries: BTreeMap<String, ValueSummary>,
    /// Records kept despite carrying zero headers (they still carry label
    /// signal; binarization gives them all-zero rows).
    pub empty_header_records: usize,
    /// Filled by [`header_overlap`] when profiling several datasets at once.
    pub overlap_counts: Option<BTreeMap<String, usize>>,
}

/// Profiles one labeled dataset. `value_summary_headers` names the headers
/// (lowercase) whose values should be summarized numerically.
pub fn profile_dataset(
    ds: &Dataset,
    value_summary_headers: &[String],
) -> Result<ProfileReport, IngestError> {
    if !ds.is_labeled() {
        return Err(IngestError::Unlabeled("profile requires a labeled dataset".into()));
    }
    if ds.records.is_empty() {
        return Err(IngestError::InvalidArgument("cannot profile an empty dataset".into()));
    }
    let n = ds.records.len();

    let mut per_label_count: BTreeMap<&str, usize> = BTreeMap::new();
    let mut unique_headers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut headers_per_record: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut header_frequency: BTreeMap<String, usize> = BTreeMap::new();
    let mut values: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    let mut value_parsed: BTreeMap<&str, usize> = BTreeMap::new();
    let mut value_skipped: BTreeMap<&str, usize> = BTreeMap::new();
    let mut empty_header_records = 0usize;

    for r in &ds.records {
        let label = ds.label_of(r.record_id)?.as_str();
        *per_label_count.entry(label).or_default() += 1;

        let mut distinct: BTreeSet<&str> = BTreeSet::new();
        for (name, value) in &r.headers {
            distinct.insert(name.as_str());
            unique_headers.entry(label).or_default().insert(name.as_str());
            if let Some(wanted) = value_summary_headers.iter().find(|w| w.as_str() == name) {
                match value.trim().parse::<i64>() {
                    Ok(v) => {
                        values
                            .entry(wanted.as_str())
                            .or_default()
                            .entry(label)
                            .or_default()
                            .push(v as f64);
                        *value_parsed.entry(wanted.as_str()).or_default() += 1;
                    }
                    Err(_) => *value_skipped.entry(wanted.as_str()).or_default() += 1,
                }
            }
        }
        if distinct.is_empty() {
            empty_header_records += 1;
        }
        for name in &distinct {
            *header_frequency.entry((*name).to_string()).or_default() += 1;
        }
        headers_per_record.entry(label).or_default().push(distinct.len() as f64);
    }

    let responses_per_label = per_label_count
        .iter()
        .map(|(l, c)| (l.to_string(), LabelCounts { count: *c, fraction: *c as f64 / n as f64 }))
        .collect();
    let unique_headers_per_label =
        unique_headers.iter().map(|(l, s)| (l.to_string(), s.len())).collect();
    let headers_per_record_quartiles = headers_per_record
        .iter_mut()
        .map(|(l, xs)| {
            let (q1, median, q3) = quartiles(xs);
            (l.to_string(), Quartiles { q1, median, q3 })
        })
        .collect();

    let mut value_summaries = BTreeMap::new();
    for wanted in value_summary_headers {
        let mut per_label = BTreeMap::new();
        if let Some(by_label) = values.get_mut(wanted.as_str()) {
            for (label, xs) in by_label.iter_mut() {
                let (q1, median, q3) = quartiles(xs);
                per_label.insert(label.to_string(), Quartiles { q1, median, q3 });
            }
        }
        value_summaries.insert(
            wanted.clone(),
            ValueSummary {
                per_label,
                parsed: value_parsed.get(wanted.as_str()).copied().unwrap_or(0),
                skipped: value_skipped.get(wanted.as_str()).copied().unwrap_or(0),
            },
        );
    }

    Ok(ProfileReport {
        responses_per_label,
        unique_headers_per_label,
        headers_per_record_quartiles,
        header_frequency,
        value_summaries,
        empty_header_records,
        overlap_counts: None,
    })
}

/// Partitions the union of header names across datasets into exact
/// intersection regions (the cells of a Venn diagram). Keys are the sorted
/// participating tags joined with `&`; every observed header lands in
/// exactly one region, so the regions containing a tag sum to that
/// dataset's unique-header count.
pub fn header_overlap(datasets: &[(String, &Dataset)]) -> Result<BTreeMap<String, usize>, IngestError> {
    if datasets.len() < 2 {
        return Err(IngestError::InvalidArgument("overlap needs at least two datasets".into()));
    }
    if datasets.len() > 16 {
        return Err(IngestError::InvalidArgument("overlap supports at most 16 datasets".into()));
    }
    let mut membership: BTreeMap<&str, u32> = BTreeMap::new();
    for (i, (_, ds)) in datasets.iter().enumerate() {
        for r in &ds.records {
            for (name, _) in &r.headers {
                *membership.entry(name.as_str()).or_default() |= 1 << i;
            }
        }
    }
    let mut regions: BTreeMap<String, usize> = BTreeMap::new();
    for mask in membership.values() {
        let tags: Vec<&str> = datasets
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, (tag, _))| tag.as_str())
            .collect();
        *regions.entry(tags.join("&")).or_default() += 1;
    }
    Ok(regions)
}

#[cfg(test)]
mod tests {
    use super::super::tests::record;
    use super::super::{Label, Provenance};
    use super::*;

    fn labeled(records: Vec<super::super::HttpMessageRecord>, labels: &[Label]) -> Dataset {
        let map = records.iter().zip(labels).map(|(r, l)| (r.record_id, *l)).collect();
        Dataset::new(records, Provenance::default(), Some(map)).unwrap()
    }

    fn fixture() -> Dataset {
        labeled(
            vec![
                record(0, "t1.example", &[("p3p", "CP"), ("content-length", "62"), ("p3p", "CP2")]),
                record(1, "t2.example", &[("content-length", "40")]),
                record(2, "s1.example", &[("server", "nginx"), ("content-length", "8068"), ("etag", "x")]),
                record(3, "s2.example", &[("content-length", "9000"), ("server", "apache")]),
                record(4, "s3.example", &[]),
            ],
            &[Label::Tracker, Label::Tracker, Label::NonTracker, Label::NonTracker, Label::NonTracker],
        )
    }

    #[test]
    fn test_label_counts_and_fractions() {
        let report = profile_dataset(&fixture(), &[]).unwrap();
        assert_eq!(report.responses_per_label["T"].count, 2);
        assert_eq!(report.responses_per_label["NT"].count, 3);
        let sum: f64 = report.responses_per_label.values().map(|c| c.fraction).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn test_unique_headers_and_per_record_distinct_count() {
        let report = profile_dataset(&fixture(), &[]).unwrap();
        // T side sees {p3p, content-length}; NT side {server, content-length, etag}.
        assert_eq!(report.unique_headers_per_label["T"], 2);
        assert_eq!(report.unique_headers_per_label["NT"], 3);
        // Record 0 has p3p twice but counts 2 distinct names: median of [2, 1] -> 1.5.
        assert_eq!(report.headers_per_record_quartiles["T"].median, 1.5);
        assert_eq!(report.empty_header_records, 1);
    }

    #[test]
    fn test_header_frequency_counts_records_not_occurrences() {
        let report = profile_dataset(&fixture(), &[]).unwrap();
        assert_eq!(report.header_frequency["p3p"], 1); // twice in one record
        assert_eq!(report.header_frequency["content-length"], 4);
        assert_eq!(report.header_frequency["server"], 2);
    }

    #[test]
    fn test_value_summary_medians_split_by_label() {
        let report = profile_dataset(&fixture(), &["content-length".to_string()]).unwrap();
        let summary = &report.value_summaries["content-length"];
        assert_eq!(summary.per_label["T"].median, 51.0); // median of 62, 40
        assert_eq!(summary.per_label["NT"].median, 8534.0); // median of 8068, 9000
        assert_eq!(summary.parsed, 4);
        assert_eq!(summary.skipped, 0);
    }

    #[test]
    fn test_value_summary_counts_unparseable() {
        let ds = labeled(
            vec![record(0, "a.example", &[("etag", "\"abc\"")]), record(1, "b.example", &[("etag", "7")])],
            &[Label::Tracker, Label::NonTracker],
        );
        let report = profile_dataset(&ds, &["etag".to_string()]).unwrap();
        assert_eq!(report.value_summaries["etag"].parsed, 1);
        assert_eq!(report.value_summaries["etag"].skipped, 1);
    }

    #[test]
    fn test_unlabeled_dataset_rejected() {
        let ds = Dataset::new(vec![record(0, "a.example", &[])], Provenance::default(), None).unwrap();
        assert!(matches!(profile_dataset(&ds, &[]), Err(IngestError::Unlabeled(_))));
    }

    #[test]
    fn test_overlap_partitions_unique_header_sets() {
        let a = labeled(vec![record(0, "a.example", &[("x", "1"), ("y", "1")])], &[Label::Tracker]);
        let b = labeled(vec![record(0, "b.example", &[("y", "1"), ("z", "1")])], &[Label::Tracker]);
        let c = labeled(vec![record(0, "c.example", &[("y", "1"), ("z", "1"), ("w", "1")])], &[Label::Tracker]);
        let regions =
            header_overlap(&[("a".to_string(), &a), ("b".to_string(), &b), ("c".to_string(), &c)]).unwrap();
        assert_eq!(regions["a&b&c"], 1); // y
        assert_eq!(regions["b&c"], 1); // z
        assert_eq!(regions["a"], 1); // x
        assert_eq!(regions["c"], 1); // w
        // Regions containing each dataset sum to its unique-header count.
        let sum_a: usize = regions.iter().filter(|(k, _)| k.split('&').any(|t| t == "a")).map(|(_, v)| v).sum();
        assert_eq!(sum_a, 2);
        let sum_c: usize = regions.iter().filter(|(k, _)| k.split('&').any(|t| t == "c")).map(|(_, v)| v).sum();
        assert_eq!(sum_c, 3);
    }
}
