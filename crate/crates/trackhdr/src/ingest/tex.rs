//! Importer for raw browser-extension webRequest exports ("tex_json").
//!
//! The export format in the wild is loose: a top-level JSON array of event
//! objects, or an object whose values are such arrays (one per event kind).
//! Each event carries a `url`, a `timeStamp` in epoch milliseconds, and a
//! header list under `responseHeaders` / `requestHeaders` — either an array
//! of `{name, value}` objects or a plain name→value map. Everything else is
//! ignored. Entries that do not carry the requested header stream, or whose
//! URL has no host, are skipped and counted, never fatal; only a malformed
//! top-level document is an error.

use serde_json::Value;

use super::{
    hostname_from_url, Dataset, Direction, HttpMessageRecord, IngestError, IngestOutcome,
    Provenance, SkipCounts,
};

/// Parses one capture document. `source_path` only feeds provenance.
pub fn parse_tex_capture(
    text: &str,
    direction: Direction,
    browser_tag: &str,
    source_path: &str,
) -> Result<IngestOutcome, IngestError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| IngestError::Parse(format!("{source_path}: {e}")))?;
    let entries: Vec<&Value> = match &root {
        Value::Array(items) => items.iter().collect(),
        // Object-of-arrays exports: flatten values in key order (serde_json
        // maps iterate sorted, so this is deterministic).
        Value::Object(map) => {
            let mut out = Vec::new();
            for v in map.values() {
                match v {
                    Value::Array(items) => out.extend(items.iter()),
                    _ => out.push(v),
                }
            }
            out
        }
        _ => {
            return Err(IngestError::Parse(format!(
                "{source_path}: top level must be an array or object of arrays"
            )))
        }
    };

    let mut skipped = SkipCounts::default();
    let mut records = Vec::new();
    for entry in entries {
        let obj = match entry.as_object() {
            Some(o) => o,
            None => {
                skipped.not_an_object += 1;
                continue;
            }
        };
        let url = match obj.get("url").and_then(Value::as_str) {
            Some(u) => u,
            None => {
                skipped.missing_url += 1;
                continue;
            }
        };
        let host = match hostname_from_url(url) {
            Ok(h) => h,
            Err(_) => {
                skipped.bad_url += 1;
                continue;
            }
        };
        let header_key = match direction {
            Direction::Response => "responseHeaders",
            Direction::Request => "requestHeaders",
        };
        let raw_headers = match obj.get(header_key) {
            Some(h) => h,
            None => {
                skipped.other_direction += 1;
                continue;
            }
        };
        let headers = match parse_headers(raw_headers) {
            Some(h) => h,
            None => {
                skipped.bad_headers += 1;
                continue;
            }
        };
        let ts = obj.get("timeStamp").and_then(Value::as_f64).map(|t| t as i64).unwrap_or(0);
        records.push(HttpMessageRecord {
            record_id: records.len() as u64,
            direction,
            remote_hostname: host,
            url: url.to_string(),
            headers,
            browser_tag: browser_tag.to_string(),
            capture_timestamp: ts,
        });
    }

    let provenance = Provenance {
        source_paths: vec![source_path.to_string()],
        browser_tag: browser_tag.to_string(),
        ..Default::default()
    };
    let dataset = Dataset::new(records, provenance, None)?;
    Ok(IngestOutcome { dataset, skipped })
}

/// Accepts `[{name, value}, ...]` or `{name: value, ...}`. Names are
/// lowercased; a missing value becomes the empty string. Returns None when
/// the shape is unusable.
fn parse_headers(raw: &Value) -> Option<Vec<(String, String)>> {
    match raw {
        Value::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                let obj = item.as_object()?;
                let name = obj.get("name")?.as_str()?.to_ascii_lowercase();
                let value = match obj.get("value") {
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Number(n)) => n.to_string(),
                    _ => String::new(),
                };
                out.push((name, value));
            }
            Some(out)
        }
        Value::Object(map) => {
            let mut out = Vec::with_capacity(map.len());
            for (name, value) in map {
                let value = match value {
                    Value::String(s) => s.clone(),
                    Value::Number(n) => n.to_string(),
                    _ => String::new(),
                };
                out.push((name.to_ascii_lowercase(), value));
            }
            Some(out)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"[
        {"url": "https://Tracker.Example/pixel.gif", "timeStamp": 1650000000123.7,
         "responseHeaders": [{"name": "P3P", "value": "CP=\"NOI\""}, {"name": "Content-Length", "value": "62"}],
         "statusCode": 200, "type": "image"},
        {"url": "https://site.example/index.html", "timeStamp": 1650000000500.0,
         "responseHeaders": {"Server": "nginx", "Content-Length": "8068"}},
        {"url": "https://site.example/app.js", "requestHeaders": [{"name": "Accept", "value": "*/*"}]},
        {"url": "nonsense url", "responseHeaders": []},
        {"responseHeaders": []},
        42
    ]"#;

    #[test]
    fn test_parses_responses_and_counts_skips() {
        let out = parse_tex_capture(SAMPLE, Direction::Response, "chrome", "mem").unwrap();
        assert_eq!(out.dataset.records.len(), 2);
        assert_eq!(out.skipped.other_direction, 1);
        assert_eq!(out.skipped.bad_url, 1);
        assert_eq!(out.skipped.missing_url, 1);
        assert_eq!(out.skipped.not_an_object, 1);

        let r0 = &out.dataset.records[0];
        assert_eq!(r0.remote_hostname, "tracker.example");
        assert_eq!(r0.headers, vec![("p3p".to_string(), "CP=\"NOI\"".to_string()),
                                    ("content-length".to_string(), "62".to_string())]);
        assert_eq!(r0.capture_timestamp, 1650000000123);
        assert_eq!(r0.browser_tag, "chrome");

        // Map-style headers are accepted too.
        let r1 = &out.dataset.records[1];
        assert!(r1.headers.contains(&("server".to_string(), "nginx".to_string())));
    }

    #[test]
    fn test_request_stream_selection() {
        let out = parse_tex_capture(SAMPLE, Direction::Request, "chrome", "mem").unwrap();
        assert_eq!(out.dataset.records.len(), 1);
        assert_eq!(out.dataset.records[0].headers[0].0, "accept");
        // The two response-only entries count as other_direction.
        assert_eq!(out.skipped.other_direction, 2);
    }

    #[test]
    fn test_object_of_arrays_root() {
        let text = r#"{"batch2": [{"url":"https://b.example/","responseHeaders":[]}],
                       "batch1": [{"url":"https://a.example/","responseHeaders":[]}]}"#;
        let out = parse_tex_capture(text, Direction::Response, "fx", "mem").unwrap();
        // Key order (sorted) decides the merge: batch1 before batch2.
        let hosts: Vec<_> = out.dataset.records.iter().map(|r| r.remote_hostname.as_str()).collect();
        assert_eq!(hosts, vec!["a.example", "b.example"]);
    }

    #[test]
    fn test_malformed_document_is_fatal() {
        assert!(matches!(
            parse_tex_capture("\"just a string\"", Direction::Response, "x", "mem"),
            Err(IngestError::Parse(_))
        ));
        assert!(matches!(
            parse_tex_capture("{not json", Direction::Response, "x", "mem"),
            Err(IngestError::Parse(_))
        ));
    }
}
