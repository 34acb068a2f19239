//! Canonical JSONL dataset format.
//!
//! Line 1 is a meta header, then one record per line:
//!
//! ```text
//! {"v":1,"meta":{...provenance...}}
//! {"v":1,"id":0,"dir":"res","host":"a.example","url":"https://a.example/","browser":"chrome","ts":0,"hdr":[["server","nginx"]],"label":"NT"}
//! ```
//!
//! UTF-8, LF line endings, `label` is `null` for unlabeled datasets. The
//! byte form is deterministic: field order is fixed and maps are sorted, so
//! identical datasets always serialize identically.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{content_digest, Dataset, Direction, HttpMessageRecord, IngestError, Label, Provenance};

const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MetaLine<'a> {
    v: u32,
    meta: std::borrow::Cow<'a, Provenance>,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    v: u32,
    id: u64,
    dir: Direction,
    host: String,
    url: String,
    browser: String,
    ts: i64,
    hdr: Vec<(String, String)>,
    label: Option<Label>,
}

/// Canonical single-line serialization of one record. Used both for file
/// output and for content digests (digests always pass `label: None`).
pub(super) fn record_line(r: &HttpMessageRecord, label: Option<Label>) -> String {
    let line = RecordLine {
        v: SCHEMA_VERSION,
        id: r.record_id,
        dir: r.direction,
        host: r.remote_hostname.clone(),
        url: r.url.clone(),
        browser: r.browser_tag.clone(),
        ts: r.capture_timestamp,
        hdr: r.headers.clone(),
        label,
    };
    serde_json::to_string(&line).expect("record serialization cannot fail")
}

/// Writes a dataset in the canonical JSONL form.
pub fn persist_dataset(ds: &Dataset, path: &Path) -> Result<(), IngestError> {
    ds.validate()?;
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let meta = MetaLine { v: SCHEMA_VERSION, meta: std::borrow::Cow::Borrowed(&ds.provenance) };
    serde_json::to_writer(&mut w, &meta).map_err(|e| IngestError::Parse(e.to_string()))?;
    w.write_all(b"\n")?;
    for r in &ds.records {
        let label = ds.label_map.as_ref().and_then(|m| m.get(&r.record_id)).copied();
        w.write_all(record_line(r, label).as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn check_version(value: &serde_json::Value, line_no: usize) -> Result<(), IngestError> {
    match value.get("v") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => Ok(()),
        Some(v) => Err(IngestError::SchemaVersion { found: v.to_string() }),
        None => Err(IngestError::Parse(format!("line {line_no}: missing version tag"))),
    }
}

/// Reads a canonical JSONL dataset, verifying the schema version, label
/// coverage, and the stored content digest.
pub fn load_dataset(path: &Path) -> Result<Dataset, IngestError> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    let meta_text = match lines.next() {
        Some(l) => l?,
        None => return Err(IngestError::Parse(format!("{}: empty file", path.display()))),
    };
    let meta_value: serde_json::Value = serde_json::from_str(&meta_text)
        .map_err(|e| IngestError::Parse(format!("meta line: {e}")))?;
    check_version(&meta_value, 1)?;
    let meta: MetaLine = serde_json::from_value(meta_value)
        .map_err(|e| IngestError::Parse(format!("meta line: {e}")))?;
    let provenance: Provenance = meta.meta.into_owned();

    let mut records = Vec::new();
    let mut labels: BTreeMap<u64, Label> = BTreeMap::new();
    let mut labeled = 0usize;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| IngestError::Parse(format!("line {line_no}: {e}")))?;
        check_version(&value, line_no)?;
        let rec: RecordLine = serde_json::from_value(value)
            .map_err(|e| IngestError::Parse(format!("line {line_no}: {e}")))?;
        if let Some(l) = rec.label {
            labels.insert(rec.id, l);
            labeled += 1;
        }
        records.push(HttpMessageRecord {
            record_id: rec.id,
            direction: rec.dir,
            remote_hostname: rec.host,
            url: rec.url,
            browser_tag: rec.browser,
            capture_timestamp: rec.ts,
            headers: rec.hdr,
        });
    }

    let label_map = if labeled == 0 {
        None
    } else if labeled == records.len() {
        Some(labels)
    } else {
        return Err(IngestError::Parse(format!(
            "{} of {} records labeled; a dataset is all-labeled or unlabeled",
            labeled,
            records.len()
        )));
    };

    let actual = content_digest(&records);
    if actual != provenance.content_digest {
        return Err(IngestError::ContentDigestMismatch {
            stored: provenance.content_digest,
            actual,
        });
    }
    let ds = Dataset { records, provenance, label_map };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::super::tests::record;
    use super::*;

    fn sample_dataset(labeled: bool) -> Dataset {
        let records = vec![
            record(0, "tracker.example", &[("p3p", "CP=\"NOI\""), ("content-length", "62")]),
            record(1, "site.example", &[("server", "nginx"), ("content-length", "8068")]),
        ];
        let labels = labeled.then(|| {
            let mut m = BTreeMap::new();
            m.insert(0, Label::Tracker);
            m.insert(1, Label::NonTracker);
            m
        });
        Dataset::new(records, Provenance { browser_tag: "testbrowser".into(), ..Default::default() }, labels)
            .unwrap()
    }

    #[test]
    fn test_round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        for labeled in [false, true] {
            let ds = sample_dataset(labeled);
            persist_dataset(&ds, &path).unwrap();
            let back = load_dataset(&path).unwrap();
            assert_eq!(ds, back);
        }
    }

    #[test]
    fn test_persist_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
        let ds = sample_dataset(true);
        persist_dataset(&ds, &p1).unwrap();
        persist_dataset(&ds, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn test_unknown_schema_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        let ds = sample_dataset(false);
        persist_dataset(&ds, &path).unwrap();
        let mangled = std::fs::read_to_string(&path).unwrap().replacen("{\"v\":1,", "{\"v\":999,", 1);
        std::fs::write(&path, mangled).unwrap();
        match load_dataset(&path) {
            Err(IngestError::SchemaVersion { found }) => assert_eq!(found, "999"),
            other => panic!("expected SchemaVersion error, got {other:?}"),
        }
    }

    #[test]
    fn test_tampered_records_fail_digest_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        persist_dataset(&sample_dataset(false), &path).unwrap();
        let mangled = std::fs::read_to_string(&path).unwrap().replace("nginx", "apache");
        std::fs::write(&path, mangled).unwrap();
        assert!(matches!(load_dataset(&path), Err(IngestError::ContentDigestMismatch { .. })));
    }

    #[test]
    fn test_partial_labeling_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        persist_dataset(&sample_dataset(true), &path).unwrap();
        // Strip the label from one record only.
        let mangled = std::fs::read_to_string(&path).unwrap().replace("\"label\":\"NT\"", "\"label\":null");
        std::fs::write(&path, mangled).unwrap();
        assert!(matches!(load_dataset(&path), Err(IngestError::Parse(_))));
    }
}
