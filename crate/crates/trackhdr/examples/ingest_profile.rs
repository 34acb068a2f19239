//! Parse a raw capture export, label it with filter rules, and profile it.
//!
//! Run with: `cargo run --example ingest_profile`

use serde_json::json;
use trackhdr::filterlist::{label_dataset, parse_filter_list};
use trackhdr::ingest::{parse_tex_capture, profile_dataset, Direction};

/// A small webRequest-style export: a JSON array of events, each carrying a
/// url, a timestamp, and a responseHeaders list. Tracker hosts answer with
/// cookie-syncing headers; content hosts answer with caching headers.
fn synthetic_capture() -> String {
    let mut events = Vec::new();
    for i in 0..240u64 {
        let (host, headers) = if i % 3 == 0 {
            (
                format!("pixel{}.adsync.example", i % 4),
                json!([
                    {"name": "Content-Type", "value": "image/gif"},
                    {"name": "Set-Cookie", "value": format!("uid={i}; SameSite=None")},
                    {"name": "P3P", "value": "CP=NOI DSP"},
                    {"name": "Content-Length", "value": format!("{}", 35 + i % 7)},
                ]),
            )
        } else {
            (
                format!("static{}.cdn.example", i % 6),
                json!([
                    {"name": "Content-Type", "value": "text/css"},
                    {"name": "Cache-Control", "value": format!("max-age={}", 3600 * (i % 5 + 1))},
                    {"name": "ETag", "value": format!("\"{i:x}\"")},
                    {"name": "Content-Length", "value": format!("{}", 4000 + i * 13 % 9000)},
                ]),
            )
        };
        events.push(json!({
            "url": format!("https://{host}/r/{i}"),
            "timeStamp": 1_700_000_000_000u64 + i,
            "responseHeaders": headers,
        }));
    }
    serde_json::to_string(&json!(events)).unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let capture = synthetic_capture();
    let outcome = parse_tex_capture(&capture, Direction::Response, "demo-browser", "inline")?;
    println!(
        "ingested {} records ({} skipped)",
        outcome.dataset.records.len(),
        outcome.skipped.total()
    );

    // EasyList-style rules; the hostname is all that matters for labeling.
    let filters = parse_filter_list("! demo list\n||adsync.example^\n");
    println!(
        "filter list: {} rules, {} lines skipped",
        filters.rules.len(),
        filters.diagnostics.total_skipped()
    );

    let labeled = label_dataset(&outcome.dataset, &filters, false)?;
    let (trackers, non_trackers) = labeled.label_counts();
    println!("labels: {trackers} trackers / {non_trackers} non-trackers");

    let report = profile_dataset(&labeled, &["content-length".into()])?;
    for (label, counts) in &report.responses_per_label {
        println!(
            "  [{label}] {} responses ({:.1}%)",
            counts.count,
            100.0 * counts.fraction
        );
    }
    for (label, q) in &report.headers_per_record_quartiles {
        println!("  [{label}] headers per record: {:.0}/{:.0}/{:.0} (Q1/median/Q3)", q.q1, q.median, q.q3);
    }
    let summary = &report.value_summaries["content-length"];
    for (label, q) in &summary.per_label {
        println!(
            "  [{label}] content-length median {:.0} (IQR {:.0}..{:.0})",
            q.median, q.q1, q.q3
        );
    }
    Ok(())
}
