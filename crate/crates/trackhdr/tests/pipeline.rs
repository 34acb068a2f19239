//! End-to-end exercises of the installed binary: every subcommand in its
//! intended order against a synthetic capture, the documented exit-code
//! contract, the manifest digest chain, and byte determinism of reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_trackhdr")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary should spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[track_caller]
fn assert_ok(out: &Output) -> String {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(out));
    stdout(out)
}

/// Runtime failures exit 1 and leave exactly one `Class: message` line on
/// stderr.
#[track_caller]
fn assert_runtime_error(out: &Output, class: &str) {
    assert_eq!(out.status.code(), Some(1), "stdout: {}", stdout(out));
    let err = stderr(out);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "expected a single stderr line, got: {err:?}");
    assert!(
        lines[0].starts_with(&format!("{class}: ")),
        "stderr {err:?} does not start with {class:?}"
    );
}

fn sha256_hex(path: &Path) -> String {
    let bytes = std::fs::read(path).unwrap();
    let mut h = Sha256::new();
    h.update(&bytes);
    hex::encode(h.finalize())
}

/// Every manifest must replay: each recorded input and output digest has
/// to match the file sitting on disk right now. Paths are recorded as
/// given on the command line, so they resolve against the working
/// directory the command ran in.
#[track_caller]
fn assert_manifest_verifies(cwd: &Path, manifest_path: &Path, command: &str) {
    let text = std::fs::read_to_string(manifest_path)
        .unwrap_or_else(|e| panic!("{}: {e}", manifest_path.display()));
    let m: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(m["command"], command);
    assert_eq!(m["v"], 1);
    for side in ["inputs", "outputs"] {
        let entries = m[side].as_array().unwrap();
        if side == "outputs" {
            assert!(!entries.is_empty(), "{command} manifest records no outputs");
        }
        for entry in entries {
            let rel = PathBuf::from(entry["path"].as_str().unwrap());
            let file = if rel.is_absolute() { rel } else { cwd.join(&rel) };
            assert!(file.is_file(), "{command}: recorded file {} missing", file.display());
            assert_eq!(
                sha256_hex(&file),
                entry["sha256"].as_str().unwrap(),
                "{command}: digest drift for {}",
                file.display()
            );
        }
    }
}

/// Deterministic synthetic capture in the browser-export shape. Trackers
/// live under pixel.example. Class membership follows i mod 10 while
/// header presence follows i mod 7, so every informative header shows up
/// in both classes (at very different rates) and survives vocabulary
/// filtering; x-sync is tracker-only on purpose to exercise the
/// single-label drop.
fn capture_json(n: usize, tracker_mod: usize, extra_header: Option<&str>) -> String {
    let mut events = Vec::with_capacity(n);
    for i in 0..n {
        let tracker = i % 10 < tracker_mod;
        let host = if tracker {
            format!("p{}.pixel.example", i % 7)
        } else {
            format!("s{}.site.example", i % 9)
        };
        let mut headers = vec![serde_json::json!({
            "name": "Content-Type",
            "value": if i % 2 == 0 { "text/html" } else { "image/gif" },
        })];
        if i % 7 < if tracker { 6 } else { 2 } {
            headers.push(serde_json::json!({"name": "Set-Cookie", "value": format!("id={}", i % 5)}));
        }
        if i % 7 < if tracker { 1 } else { 5 } {
            headers
                .push(serde_json::json!({"name": "Cache-Control", "value": format!("max-age={}", 60 * (i % 4 + 1))}));
        }
        if i % 7 < if tracker { 5 } else { 1 } {
            headers.push(serde_json::json!({"name": "P3P", "value": format!("CP{}", i % 2)}));
        }
        if (i / 2) % 2 == 0 {
            headers.push(serde_json::json!({"name": "ETag", "value": format!("\"{:x}\"", i % 6)}));
        }
        if tracker && i % 7 < 3 {
            headers.push(serde_json::json!({"name": "X-Sync", "value": format!("s{}", i % 3)}));
        }
        headers.push(serde_json::json!({"name": "Content-Length", "value": format!("{}", if tracker { 35 + i % 10 } else { 900 + 40 * (i % 12) })}));
        if let Some(name) = extra_header {
            headers.push(serde_json::json!({"name": name, "value": format!("x{}", i % 3)}));
        }
        events.push(serde_json::json!({
            "url": format!("https://{host}/r/{i}"),
            "timeStamp": 1_660_000_000_000u64 + i as u64,
            "responseHeaders": headers,
        }));
    }
    serde_json::to_string_pretty(&events).unwrap()
}

const FILTERS: &str = "! demo list\n||pixel.example^\n@@||s0.site.example^$document\n";

#[test]
fn full_cli_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("capture_a.json"), capture_json(600, 3, None)).unwrap();
    std::fs::write(dir.join("capture_b.json"), capture_json(300, 4, Some("X-B-Only"))).unwrap();
    std::fs::write(dir.join("filters.txt"), FILTERS).unwrap();

    // ingest -------------------------------------------------------------
    let out = run(
        dir,
        &["ingest", "--in", "capture_a.json", "--browser-tag", "chrome_a", "--out", "raw_a.jsonl"],
    );
    let text = assert_ok(&out);
    assert!(text.contains("600"), "ingest summary should mention the record count: {text}");
    assert_manifest_verifies(dir, &dir.join("raw_a.jsonl.manifest.json"), "ingest");

    // browser tag is mandatory for raw exports
    let out = run(dir, &["ingest", "--in", "capture_a.json", "--out", "x.jsonl"]);
    assert_runtime_error(&out, "InvalidArgument");

    // label ----------------------------------------------------------------
    let out = run(
        dir,
        &["label", "--in", "raw_a.jsonl", "--filter-list", "filters.txt", "--out", "labeled_a.jsonl"],
    );
    assert_ok(&out);
    assert_manifest_verifies(dir, &dir.join("labeled_a.jsonl.manifest.json"), "label");

    // profile ----------------------------------------------------------------
    let out = run(
        dir,
        &["profile", "--in", "labeled_a.jsonl", "--value-summary-header", "content-length", "--out", "profile.json"],
    );
    let text = assert_ok(&out);
    assert!(text.contains("content-length"), "profile output: {text}");
    assert!(dir.join("profile.json").is_file());

    // prepare ----------------------------------------------------------------
    let out = run(
        dir,
        &["prepare", "--in", "labeled_a.jsonl", "--seed", "42", "--out-dir", "out_a"],
    );
    let text = assert_ok(&out);
    assert!(text.contains("train"), "prepare summary: {text}");
    for rel in [
        "out_a/datasets/train.jsonl",
        "out_a/datasets/calib.jsonl",
        "out_a/datasets/test.jsonl",
        "out_a/vocab/vocabulary.json",
        "out_a/matrices/train.bfm",
        "out_a/matrices/calib.bfm",
        "out_a/matrices/test.bfm",
        "out_a/matrices/pipeline.json",
    ] {
        assert!(dir.join(rel).is_file(), "{rel} missing after prepare");
    }
    assert_manifest_verifies(dir, &dir.join("out_a/prepare.manifest.json"), "prepare");

    // prepare can label on the fly from the raw dataset
    let out = run(
        dir,
        &["prepare", "--in", "raw_a.jsonl", "--filter-list", "filters.txt", "--out-dir", "out_inline"],
    );
    assert_ok(&out);
    // identical data, identical settings => identical matrices
    assert_eq!(
        sha256_hex(&dir.join("out_a/matrices/train.bfm")),
        sha256_hex(&dir.join("out_inline/matrices/train.bfm")),
        "labeling inline during prepare changed the matrix"
    );

    // an unlabeled input without filter lists must be rejected
    let out = run(dir, &["prepare", "--in", "raw_a.jsonl", "--out-dir", "out_x"]);
    assert_runtime_error(&out, "InvalidArgument");

    // train ----------------------------------------------------------------
    let out = run(
        dir,
        &["train", "--matrix", "out_a/matrices/train.bfm", "--kind", "random-forest", "--out", "rf.model"],
    );
    assert_ok(&out);
    assert_manifest_verifies(dir, &dir.join("rf.model.manifest.json"), "train");

    let out = run(
        dir,
        &["train", "--matrix", "out_a/matrices/train.bfm", "--kind", "lgbm", "--out", "gb.model"],
    );
    assert_ok(&out);

    let out = run(
        dir,
        &["train", "--matrix", "out_a/matrices/train.bfm", "--kind", "made-up", "--out", "x.model"],
    );
    assert_runtime_error(&out, "InvalidParameter");

    // determinism: retrain into a fresh path, compare bytes; thread count
    // must not matter either
    let out = run(
        dir,
        &["train", "--matrix", "out_a/matrices/train.bfm", "--kind", "random-forest", "--out", "rf_again.model"],
    );
    assert_ok(&out);
    assert_eq!(
        sha256_hex(&dir.join("rf.model")),
        sha256_hex(&dir.join("rf_again.model")),
        "identical train invocations produced different model bytes"
    );
    let out = run(
        dir,
        &["--threads", "1", "train", "--matrix", "out_a/matrices/train.bfm", "--kind", "extra-trees", "--out", "et1.model"],
    );
    assert_ok(&out);
    let out = run(
        dir,
        &["--threads", "4", "train", "--matrix", "out_a/matrices/train.bfm", "--kind", "extra-trees", "--out", "et4.model"],
    );
    assert_ok(&out);
    assert_eq!(
        sha256_hex(&dir.join("et1.model")),
        sha256_hex(&dir.join("et4.model")),
        "thread count changed training output"
    );

    // calibrate ----------------------------------------------------------------
    let out = run(
        dir,
        &["calibrate", "--model", "rf.model", "--matrix", "out_a/matrices/calib.bfm", "--out", "rf_cal.model"],
    );
    assert_ok(&out);
    assert_manifest_verifies(dir, &dir.join("rf_cal.model.manifest.json"), "calibrate");

    // calibrating twice is a usage error, not a silent re-fit
    let out = run(
        dir,
        &["calibrate", "--model", "rf_cal.model", "--matrix", "out_a/matrices/calib.bfm", "--out", "x.model"],
    );
    assert_runtime_error(&out, "InvalidArgument");

    // evaluate ----------------------------------------------------------------
    let out = run(
        dir,
        &[
            "evaluate", "--model", "rf_cal.model", "--matrix", "out_a/matrices/test.bfm",
            "--bootstrap", "199", "--tag", "rf-test", "--out-dir", "reports",
        ],
    );
    let text = assert_ok(&out);
    assert!(text.contains("rf-test"), "evaluate table: {text}");
    for rel in [
        "reports/rf-test.metrics.json",
        "reports/rf-test.roc.csv",
        "reports/rf-test.pr.csv",
        "reports/rf-test.reliability.csv",
    ] {
        assert!(dir.join(rel).is_file(), "{rel} missing after evaluate");
    }
    assert_manifest_verifies(dir, &dir.join("reports/rf-test.metrics.json.manifest.json"), "evaluate");
    let artifact: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("reports/rf-test.metrics.json")).unwrap())
            .unwrap();
    let f1 = artifact["metrics"]["f1"].as_f64().unwrap();
    assert!(f1 >= 0.6, "header mix carries clear signal, yet f1 = {f1}");
    let (lo, hi) = (
        artifact["bootstrap"]["intervals"]["f1"]["lo"].as_f64().unwrap(),
        artifact["bootstrap"]["intervals"]["f1"]["hi"].as_f64().unwrap(),
    );
    assert!(lo <= f1 && f1 <= hi, "point estimate {f1} outside its own interval [{lo}, {hi}]");

    // second corpus with a different vocabulary ------------------------------
    let out = run(
        dir,
        &["ingest", "--in", "capture_b.json", "--browser-tag", "firefox_b", "--out", "raw_b.jsonl"],
    );
    assert_ok(&out);
    let out = run(
        dir,
        &["label", "--in", "raw_b.jsonl", "--filter-list", "filters.txt", "--out", "labeled_b.jsonl"],
    );
    assert_ok(&out);
    let out = run(
        dir,
        &["prepare", "--in", "labeled_b.jsonl", "--out-dir", "out_b"],
    );
    assert_ok(&out);

    // scoring against a foreign-vocabulary matrix must fail loudly
    let out = run(
        dir,
        &["evaluate", "--model", "rf_cal.model", "--matrix", "out_b/matrices/test.bfm", "--out-dir", "reports"],
    );
    assert_runtime_error(&out, "VocabularyDigestMismatch");

    // cross-eval rebinarizes the foreign dataset through the model's own
    // vocabulary instead
    let out = run(
        dir,
        &[
            "cross-eval", "--model", "rf_cal.model", "--vocab", "out_a/vocab/vocabulary.json",
            "--test", "same=out_a/datasets/test.jsonl", "--test", "other=labeled_b.jsonl",
            "--out", "transfer.json",
        ],
    );
    let text = assert_ok(&out);
    assert!(text.contains("same") && text.contains("other"), "cross-eval table: {text}");
    let transfer: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("transfer.json")).unwrap()).unwrap();
    let outcomes = transfer["outcomes"].as_array().unwrap();
    assert_eq!(outcomes.len(), 2);
    for o in outcomes {
        let rate = o["empty_row_rate"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }
    assert!(
        outcomes[0]["metrics"]["f1"].as_f64().unwrap() >= 0.6,
        "in-distribution transfer row should score well: {}",
        outcomes[0]["metrics"]["f1"]
    );

    // cv ----------------------------------------------------------------
    let out = run(
        dir,
        &[
            "cv", "--in", "labeled_a.jsonl", "--kind", "naive-bayes", "--kind", "decision-tree",
            "--repeats", "2", "--folds", "3", "--out", "cv.json",
        ],
    );
    let text = assert_ok(&out);
    assert!(text.contains("naive-bayes") && text.contains("decision-tree"), "cv output: {text}");
    assert!(text.contains("+/-"), "cv output should carry mean +/- std: {text}");

    let out = run(dir, &["cv", "--in", "labeled_a.jsonl", "--kind", "lgbm"]);
    assert_runtime_error(&out, "InvalidArgument");

    // importance ----------------------------------------------------------------
    let out = run(
        dir,
        &[
            "importance", "--model", "rf.model", "--matrix", "out_a/matrices/test.bfm",
            "--mode", "impurity", "--vocab", "out_a/vocab/vocabulary.json",
        ],
    );
    let text = assert_ok(&out);
    assert!(text.contains("set-cookie") || text.contains("p3p") || text.contains("cache-control"),
        "impurity ranking should name real headers: {text}");

    let out = run(
        dir,
        &[
            "importance", "--model", "rf_cal.model", "--matrix", "out_a/matrices/test.bfm",
            "--mode", "permutation", "--metric", "f1", "--reps", "3",
            "--vocab", "out_a/vocab/vocabulary.json", "--out", "perm.json",
        ],
    );
    assert_ok(&out);
    assert!(dir.join("perm.json").is_file());

    // a vocabulary from the wrong prepare run is rejected
    let out = run(
        dir,
        &[
            "importance", "--model", "rf.model", "--matrix", "out_a/matrices/test.bfm",
            "--vocab", "out_b/vocab/vocabulary.json",
        ],
    );
    assert_runtime_error(&out, "VocabularyDigestMismatch");

    // report ----------------------------------------------------------------
    let out = run(
        dir,
        &["evaluate", "--model", "gb.model", "--matrix", "out_a/matrices/test.bfm", "--tag", "gb-test", "--out-dir", "reports", "--no-curves"],
    );
    assert_ok(&out);
    let out = run(
        dir,
        &["report", "--metrics", "reports/rf-test.metrics.json", "--metrics", "reports/gb-test.metrics.json", "--out", "summary.txt"],
    );
    let text = assert_ok(&out);
    assert!(text.contains("rf-test") && text.contains("gb-test"), "report table: {text}");
    let saved = std::fs::read_to_string(dir.join("summary.txt")).unwrap();
    assert!(saved.contains("rf-test"));
}

#[test]
fn exit_codes_follow_convention() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    // 0: help and version
    assert_eq!(run(dir, &["--help"]).status.code(), Some(0));
    assert_eq!(run(dir, &["--version"]).status.code(), Some(0));
    assert_eq!(run(dir, &["evaluate", "--help"]).status.code(), Some(0));

    // 2: usage errors (unknown subcommand, missing required argument)
    assert_eq!(run(dir, &["fly-to-the-moon"]).status.code(), Some(2));
    assert_eq!(run(dir, &["train", "--kind", "random-forest"]).status.code(), Some(2));
    assert_eq!(run(dir, &[]).status.code(), Some(2));

    // 1: runtime failures (missing file here)
    let out = run(dir, &["label", "--in", "nope.jsonl", "--filter-list", "nope.txt", "--out", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr(&out).lines().count(), 1, "one stderr line per failure");
}

#[test]
fn rerun_writes_byte_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("capture.json"), capture_json(400, 3, None)).unwrap();
    std::fs::write(dir.join("filters.txt"), FILTERS).unwrap();

    for pass in ["one", "two"] {
        let out = run(
            dir,
            &["ingest", "--in", "capture.json", "--browser-tag", "chrome", "--out", &format!("{pass}.jsonl")],
        );
        assert_ok(&out);
        let out = run(
            dir,
            &["prepare", "--in", &format!("{pass}.jsonl"), "--filter-list", "filters.txt", "--out-dir", pass],
        );
        assert_ok(&out);
    }
    for rel in [
        "datasets/train.jsonl",
        "datasets/calib.jsonl",
        "datasets/test.jsonl",
        "vocab/vocabulary.json",
        "matrices/train.bfm",
        "matrices/calib.bfm",
        "matrices/test.bfm",
    ] {
        assert_eq!(
            sha256_hex(&dir.join("one").join(rel)),
            sha256_hex(&dir.join("two").join(rel)),
            "{rel} differs between identical runs"
        );
    }
    // The pipeline manifest embeds source digests; those cover content,
    // not file names, so the two runs agree on everything but argv paths.
    let read = |p: &str| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(dir.join(p)).unwrap()).unwrap()
    };
    let a = read("one/matrices/pipeline.json");
    let b = read("two/matrices/pipeline.json");
    assert_eq!(a["vocabulary_digest"], b["vocabulary_digest"]);
    assert_eq!(a["class_counts"], b["class_counts"]);
}
