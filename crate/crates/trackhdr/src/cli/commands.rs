//! Subcommand implementations. Each reads explicit input paths, writes its
//! artifacts plus a run manifest, and prints a short human summary to
//! stdout. Artifact bytes are a pure function of inputs, flags, and seed;
//! timestamps exist only inside manifests.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::manifest::{
    manifest_path, read_json, write_json_pretty, CrossEvalArtifact, EvaluationArtifact,
    FileDigest, ImportanceArtifact, ImportanceRow, ManifestBuilder, PipelineManifest,
    MANIFEST_VERSION,
};
use super::{
    CalibrateArgs, CliError, CrossEvalArgs, CvArgs, EvaluateArgs, ImportanceArgs, IngestArgs,
    LabelArgs, PrepareArgs, ProfileArgs, ReportArgs, TrainArgs,
};
use crate::eval::bootstrap::bootstrap_intervals;
use crate::eval::cross::cross_evaluate;
use crate::eval::cv::{cross_validate, CvParams};
use crate::eval::report::{pr_curve_csv, reliability_csv, render_metrics_table, roc_curve_csv};
use crate::eval::{compute_metrics, log_loss, ConfusionMatrix, METRIC_NAMES};
use crate::features::{
    binarize, build_vocabulary, split_dataset, BinaryFeatureMatrix, HeaderVocabulary, SplitSpec,
    VocabularyParams,
};
use crate::filterlist::{label_dataset, load_filter_lists, FilterSet};
use crate::ingest::{
    concat_datasets, filter_hosts, ingest_capture, load_dataset, persist_dataset,
    profile_dataset, CaptureFormat, Dataset, Direction, ProfileReport, SkipCounts,
};
use crate::models::boost::GradientBoostingParams;
use crate::models::importance::{impurity_importance, permutation_importance};
use crate::models::{
    calibrate_classifier, train_classifier, Classifier, ModelError, ModelKind, ModelParams,
};
use crate::util::sha256_file;

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("out")
        .to_string()
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn parse_direction(s: &str) -> Result<Direction, CliError> {
    match s {
        "response" | "res" => Ok(Direction::Response),
        "request" | "req" => Ok(Direction::Request),
        other => Err(CliError::InvalidArgument(format!(
            "unknown header source {other:?} (expected response or request)"
        ))),
    }
}

fn parse_split(s: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::InvalidArgument(format!(
            "--split wants three comma-separated fractions, got {s:?}"
        )));
    }
    let mut fracs = [0.0; 3];
    for (slot, part) in fracs.iter_mut().zip(&parts) {
        *slot = part.trim().parse::<f64>().map_err(|_| {
            CliError::InvalidArgument(format!("fraction {part:?} is not a number"))
        })?;
    }
    Ok(fracs)
}

/// Model selector: a canonical kind name (hyphens or underscores), or a
/// gradient-boosting preset profile name.
fn parse_model_choice(s: &str) -> Result<(ModelKind, Option<ModelParams>), CliError> {
    let norm = s.replace('_', "-");
    if let Some(preset) = GradientBoostingParams::preset(&norm) {
        return Ok((ModelKind::GradientBoosting, Some(ModelParams::GradientBoosting(preset))));
    }
    Ok((ModelKind::from_str(&norm)?, None))
}

/// Higher-is-better scoring function for permutation importance.
type MetricFn = Box<dyn Fn(&[u8], &[f64]) -> f64 + Sync>;

fn metric_closure(name: &str, threshold: f64) -> Result<MetricFn, CliError> {
    let f: MetricFn = match name {
        "accuracy" => Box::new(move |l: &[u8], p: &[f64]| {
            ConfusionMatrix::from_probs(l, p, threshold).accuracy()
        }),
        "balanced-accuracy" => Box::new(move |l: &[u8], p: &[f64]| {
            ConfusionMatrix::from_probs(l, p, threshold).balanced_accuracy()
        }),
        "f1" => Box::new(move |l: &[u8], p: &[f64]| {
            ConfusionMatrix::from_probs(l, p, threshold).f1()
        }),
        "mcc" => Box::new(move |l: &[u8], p: &[f64]| {
            ConfusionMatrix::from_probs(l, p, threshold).mcc()
        }),
        "roc-auc" => Box::new(|l: &[u8], p: &[f64]| crate::eval::roc_auc(l, p).unwrap_or(0.0)),
        "auprc" => Box::new(|l: &[u8], p: &[f64]| crate::eval::auprc(l, p).unwrap_or(0.0)),
        "neg-log-loss" => Box::new(|l: &[u8], p: &[f64]| -log_loss(l, p)),
        other => {
            return Err(CliError::InvalidArgument(format!(
                "unknown permutation metric {other:?}"
            )))
        }
    };
    Ok(f)
}

fn print_skip_counts(skipped: &SkipCounts) {
    if skipped.total() == 0 {
        return;
    }
    println!(
        "skipped {} malformed entries (not-an-object {}, missing-url {}, bad-url {}, other-direction {}, bad-headers {})",
        skipped.total(),
        skipped.not_an_object,
        skipped.missing_url,
        skipped.bad_url,
        skipped.other_direction,
        skipped.bad_headers
    );
}

fn print_filter_diagnostics(filters: &FilterSet) {
    let d = &filters.diagnostics;
    println!(
        "filter set: {} rules (skipped: {} comments, {} cosmetic, {} empty, {} inapplicable-option, {} unparseable, {} oversized-regex)",
        filters.rules.len(),
        d.comments,
        d.cosmetic,
        d.empty,
        d.inapplicable_options,
        d.unparseable,
        d.regex_rejected
    );
}

fn label_summary(ds: &Dataset) -> String {
    let (t, nt) = ds.label_counts();
    let n = ds.records.len().max(1);
    format!(
        "{} records: {} trackers ({:.1}%), {} non-trackers ({:.1}%)",
        ds.records.len(),
        t,
        100.0 * t as f64 / n as f64,
        nt,
        100.0 * nt as f64 / n as f64
    )
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

pub(super) fn ingest(args: IngestArgs) -> Result<(), CliError> {
    let format = CaptureFormat::from_str(&args.format)?;
    let direction = parse_direction(&args.header_source)?;
    let browser_tag = match (&args.browser_tag, format) {
        (Some(tag), _) => tag.clone(),
        (None, CaptureFormat::CanonicalJsonl) => String::new(), // taken from the file
        (None, CaptureFormat::TexJson) => {
            return Err(CliError::InvalidArgument(
                "--browser-tag is required for tex_json input".into(),
            ))
        }
    };

    let mut manifest = ManifestBuilder::begin("ingest");
    let mut parts = Vec::new();
    let mut skipped = SkipCounts::default();
    for path in &args.inputs {
        manifest.input(path)?;
        let outcome = ingest_capture(path, format, direction, &browser_tag)?;
        skipped.not_an_object += outcome.skipped.not_an_object;
        skipped.missing_url += outcome.skipped.missing_url;
        skipped.bad_url += outcome.skipped.bad_url;
        skipped.other_direction += outcome.skipped.other_direction;
        skipped.bad_headers += outcome.skipped.bad_headers;
        parts.push(outcome.dataset);
    }
    let mut ds = concat_datasets(parts)?;
    ds.provenance.manifest =
        manifest_path(&args.out).file_name().map(|n| n.to_string_lossy().into_owned());

    ensure_parent(&args.out)?;
    persist_dataset(&ds, &args.out)?;
    manifest.output(&args.out)?;
    manifest.finish(&args.out)?;

    println!(
        "ingested {} records from {} file(s) into {}",
        ds.records.len(),
        args.inputs.len(),
        args.out.display()
    );
    print_skip_counts(&skipped);
    Ok(())
}

// ---------------------------------------------------------------------------
// label
// ---------------------------------------------------------------------------

pub(super) fn label(args: LabelArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::begin("label");
    manifest.input(&args.input)?;
    for list in &args.filter_lists {
        manifest.input(list)?;
    }

    let mut ds = load_dataset(&args.input)?;
    if !args.exclude.is_empty() {
        let before = ds.records.len();
        ds = filter_hosts(&ds, &args.exclude)?;
        println!("host exclusion removed {} records", before - ds.records.len());
    }
    let filters = load_filter_lists(&args.filter_lists)?;
    print_filter_diagnostics(&filters);
    let mut labeled = label_dataset(&ds, &filters, args.honor_exceptions)?;
    labeled.provenance.manifest =
        manifest_path(&args.out).file_name().map(|n| n.to_string_lossy().into_owned());

    ensure_parent(&args.out)?;
    persist_dataset(&labeled, &args.out)?;
    manifest.output(&args.out)?;
    manifest.finish(&args.out)?;

    println!("{}", label_summary(&labeled));
    Ok(())
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

fn print_profile(report: &ProfileReport) {
    print!("responses per label:");
    for (label, c) in &report.responses_per_label {
        print!("  {} {} ({:.2}%)", label, c.count, 100.0 * c.fraction);
    }
    println!();
    print!("unique header names:");
    for (label, n) in &report.unique_headers_per_label {
        print!("  {label} {n}");
    }
    println!();
    for (label, q) in &report.headers_per_record_quartiles {
        println!(
            "headers per record [{}]: Q1 {:.1}, median {:.1}, Q3 {:.1}",
            label, q.q1, q.median, q.q3
        );
    }
    println!("records without headers: {}", report.empty_header_records);

    let mut by_count: Vec<(&String, &usize)> = report.header_frequency.iter().collect();
    by_count.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    println!("most frequent headers:");
    for (name, count) in by_count.into_iter().take(10) {
        println!("  {count:>8}  {name}");
    }

    for (header, summary) in &report.value_summaries {
        println!(
            "value summary for {header} ({} parsed, {} skipped):",
            summary.parsed, summary.skipped
        );
        for (label, q) in &summary.per_label {
            println!(
                "  [{}] Q1 {:.1}, median {:.1}, Q3 {:.1}",
                label, q.q1, q.median, q.q3
            );
        }
    }
}

pub(super) fn profile(args: ProfileArgs) -> Result<(), CliError> {
    let ds = load_dataset(&args.input)?;
    let report = profile_dataset(&ds, &args.value_headers)?;
    print_profile(&report);

    if let Some(out) = &args.out {
        let mut manifest = ManifestBuilder::begin("profile");
        manifest.input(&args.input)?;
        ensure_parent(out)?;
        write_json_pretty(out, &report)?;
        manifest.output(out)?;
        manifest.finish(out)?;
        println!("profile written to {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// prepare
// ---------------------------------------------------------------------------

pub(super) fn prepare(args: PrepareArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::begin("prepare");
    manifest.seed(args.seed);
    manifest.input(&args.input)?;
    for list in &args.filter_lists {
        manifest.input(list)?;
    }

    let mut ds = load_dataset(&args.input)?;
    if !args.exclude.is_empty() {
        let before = ds.records.len();
        ds = filter_hosts(&ds, &args.exclude)?;
        println!("host exclusion removed {} records", before - ds.records.len());
    }
    if !args.filter_lists.is_empty() {
        let filters = load_filter_lists(&args.filter_lists)?;
        print_filter_diagnostics(&filters);
        ds = label_dataset(&ds, &filters, args.honor_exceptions)?;
    }
    if !ds.is_labeled() {
        return Err(CliError::InvalidArgument(
            "input dataset is unlabeled; label it first or pass --filter-list".into(),
        ));
    }
    println!("{}", label_summary(&ds));

    let fracs = parse_split(&args.split)?;
    let spec = SplitSpec {
        train: fracs[0],
        calib: fracs[1],
        test: fracs[2],
        seed: args.seed,
        stratified: !args.no_stratify,
    };
    let splits = split_dataset(&ds, &spec)?;

    let thresholds = VocabularyParams {
        min_presence_rate: args.min_presence_rate,
        w_dl: args.w_dl,
        w_h: args.w_h,
        tau_name: args.tau_name,
        tau_value: args.tau_value,
    };
    let vocab = build_vocabulary(&splits.train, &thresholds)?;

    let datasets_dir = args.out_dir.join("datasets");
    let vocab_dir = args.out_dir.join("vocab");
    let matrices_dir = args.out_dir.join("matrices");
    std::fs::create_dir_all(&datasets_dir)?;
    std::fs::create_dir_all(&vocab_dir)?;
    std::fs::create_dir_all(&matrices_dir)?;

    let manifest_name = "prepare.manifest.json".to_string();
    let mut outputs: Vec<PathBuf> = Vec::new();
    let mut class_counts = [[0usize; 2]; 3];
    let split_names = ["train", "calib", "test"];
    let split_sets = [&splits.train, &splits.calib, &splits.test];

    for ((name, split), counts) in split_names.iter().zip(split_sets).zip(&mut class_counts) {
        let mut split = split.clone();
        split.provenance.manifest = Some(manifest_name.clone());
        let ds_path = datasets_dir.join(format!("{name}.jsonl"));
        persist_dataset(&split, &ds_path)?;
        outputs.push(ds_path);

        let mat = binarize(&split, &vocab)?;
        let (t, nt) = mat.class_counts();
        *counts = [t, nt];
        let mat_path = matrices_dir.join(format!("{name}.bfm"));
        mat.save(&mat_path)?;
        outputs.push(mat_path);
        println!(
            "{name}: {} rows ({} trackers, {} non-trackers)",
            mat.n_rows, t, nt
        );
    }

    let vocab_path = vocab_dir.join("vocabulary.json");
    vocab.save(&vocab_path)?;
    outputs.push(vocab_path);

    let drop_counts = |reason: &str| -> usize {
        vocab
            .dropped
            .values()
            .filter(|r| {
                matches!(
                    (reason, r),
                    ("low_variance", crate::features::DropReason::LowVariance)
                        | ("missing_ratio", crate::features::DropReason::MissingRatio)
                        | ("single_label", crate::features::DropReason::SingleLabel)
                        | ("merged", crate::features::DropReason::MergedInto(_))
                )
            })
            .count()
    };
    println!(
        "vocabulary: {} columns, {} aliases (dropped: {} low-variance, {} rare, {} single-label, {} merged-then-dropped)",
        vocab.dim(),
        vocab.alias_map.len(),
        drop_counts("low_variance"),
        drop_counts("missing_ratio"),
        drop_counts("single_label"),
        drop_counts("merged")
    );

    let pipeline = PipelineManifest {
        v: MANIFEST_VERSION,
        thresholds,
        split: spec,
        vocabulary_digest: vocab.digest(),
        filter_digest: ds.provenance.filter_digest.clone(),
        source_digest: ds.provenance.content_digest.clone(),
        class_counts,
        outputs: outputs
            .iter()
            .map(|p| {
                Ok(FileDigest { path: p.display().to_string(), sha256: sha256_file(p)? })
            })
            .collect::<Result<Vec<_>, CliError>>()?,
    };
    let pipeline_path = matrices_dir.join("pipeline.json");
    write_json_pretty(&pipeline_path, &pipeline)?;
    outputs.push(pipeline_path);

    for path in &outputs {
        manifest.output(path)?;
    }
    manifest.finish(&args.out_dir.join("prepare"))?;
    println!("artifacts under {}", args.out_dir.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

pub(super) fn train(args: TrainArgs) -> Result<(), CliError> {
    let (kind, params) = parse_model_choice(&args.kind)?;
    let mut manifest = ManifestBuilder::begin("train");
    manifest.seed(args.seed);
    manifest.input(&args.matrix)?;

    let mat = BinaryFeatureMatrix::load(&args.matrix)?;
    let clf = train_classifier(&mat, kind, params, args.seed)?;
    for warning in &clf.warnings {
        println!("warning: {warning}");
    }
    println!(
        "trained {} on {} rows x {} features",
        clf.kind, mat.n_rows, mat.dim
    );

    ensure_parent(&args.out)?;
    Classifier::Plain(clf).save(&args.out)?;
    manifest.output(&args.out)?;
    manifest.finish(&args.out)?;
    println!("model written to {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

pub(super) fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::begin("calibrate");
    manifest.input(&args.model)?;
    manifest.input(&args.matrix)?;

    let clf = Classifier::load(&args.model)?;
    let base = match clf {
        Classifier::Plain(base) => base,
        Classifier::Calibrated { .. } => {
            return Err(CliError::InvalidArgument(
                "model already carries a calibration layer".into(),
            ))
        }
    };
    let mat = BinaryFeatureMatrix::load(&args.matrix)?;
    let calibrated = calibrate_classifier(base, &mat)?;
    if let Classifier::Calibrated { mapping, .. } = &calibrated {
        println!(
            "isotonic mapping fitted on {} rows ({} steps)",
            mat.n_rows,
            mapping.thresholds.len()
        );
    }

    ensure_parent(&args.out)?;
    calibrated.save(&args.out)?;
    manifest.output(&args.out)?;
    manifest.finish(&args.out)?;
    println!("calibrated model written to {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

pub(super) fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::begin("evaluate");
    manifest.seed(args.seed);
    manifest.input(&args.model)?;
    manifest.input(&args.matrix)?;

    let clf = Classifier::load(&args.model)?;
    let mat = BinaryFeatureMatrix::load(&args.matrix)?;
    let probs = clf.predict_proba(&mat)?;
    let metrics = compute_metrics(&mat.labels, &probs, args.threshold)?;
    let bootstrap = if args.bootstrap > 0 {
        Some(bootstrap_intervals(&mat.labels, &probs, args.threshold, args.bootstrap, args.seed)?)
    } else {
        None
    };

    let tag = args
        .tag
        .clone()
        .unwrap_or_else(|| format!("{}-{}", stem(&args.model), stem(&args.matrix)));
    std::fs::create_dir_all(&args.out_dir)?;

    let artifact = EvaluationArtifact {
        v: MANIFEST_VERSION,
        tag: tag.clone(),
        model_kind: clf.base().kind.to_string(),
        calibrated: clf.is_calibrated(),
        vocabulary_digest: clf.base().vocabulary_digest.clone(),
        n_rows: mat.n_rows,
        metrics: metrics.clone(),
        bootstrap: bootstrap.clone(),
    };
    let metrics_path = args.out_dir.join(format!("{tag}.metrics.json"));
    write_json_pretty(&metrics_path, &artifact)?;
    manifest.output(&metrics_path)?;

    let (t, nt) = mat.class_counts();
    if !args.no_curves {
        if t > 0 && nt > 0 {
            for (suffix, text) in [
                ("roc", roc_curve_csv(&mat.labels, &probs)?),
                ("pr", pr_curve_csv(&mat.labels, &probs)?),
                ("reliability", reliability_csv(&mat.labels, &probs, 10)?),
            ] {
                let path = args.out_dir.join(format!("{tag}.{suffix}.csv"));
                std::fs::write(&path, text)?;
                manifest.output(&path)?;
            }
        } else {
            println!("curves skipped: evaluation set holds a single class");
        }
    }

    print!("{}", render_metrics_table(&[(tag.clone(), metrics, bootstrap)]));
    manifest.finish(&metrics_path)?;
    println!("report written to {}", metrics_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// cross-eval
// ---------------------------------------------------------------------------

fn parse_test_arg(s: &str) -> (String, PathBuf) {
    match s.split_once('=') {
        Some((tag, path)) if !tag.is_empty() => (tag.to_string(), PathBuf::from(path)),
        _ => (stem(Path::new(s)), PathBuf::from(s)),
    }
}

pub(super) fn cross_eval(args: CrossEvalArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::begin("cross-eval");
    manifest.input(&args.model)?;
    manifest.input(&args.vocab)?;

    let clf = Classifier::load(&args.model)?;
    let vocab = HeaderVocabulary::load(&args.vocab)?;
    let mut datasets = Vec::new();
    for test in &args.tests {
        let (tag, path) = parse_test_arg(test);
        manifest.input(&path)?;
        datasets.push((tag, load_dataset(&path)?));
    }

    let outcomes = cross_evaluate(&clf, &vocab, &datasets, args.threshold)?;
    let rows: Vec<_> = outcomes
        .iter()
        .map(|o| (o.tag.clone(), o.metrics.clone(), None))
        .collect();
    print!("{}", render_metrics_table(&rows));
    for o in &outcomes {
        if o.empty_row_rate > 0.0 {
            println!(
                "{}: {:.1}% of {} rows carry no vocabulary header",
                o.tag,
                100.0 * o.empty_row_rate,
                o.n_records
            );
        }
    }

    if let Some(out) = &args.out {
        let artifact = CrossEvalArtifact {
            v: MANIFEST_VERSION,
            model_kind: clf.base().kind.to_string(),
            calibrated: clf.is_calibrated(),
            vocabulary_digest: clf.base().vocabulary_digest.clone(),
            threshold: args.threshold,
            outcomes,
        };
        ensure_parent(out)?;
        write_json_pretty(out, &artifact)?;
        manifest.output(out)?;
        manifest.finish(out)?;
        println!("transfer report written to {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// cv
// ---------------------------------------------------------------------------

pub(super) fn cv(args: CvArgs) -> Result<(), CliError> {
    let mut kinds = Vec::new();
    let mut seen = BTreeSet::new();
    for name in &args.kinds {
        let (kind, params) = parse_model_choice(name)?;
        if params.is_some() {
            return Err(CliError::InvalidArgument(format!(
                "{name:?} is a preset profile; cross-validation runs canonical kinds with default hyperparameters"
            )));
        }
        if !seen.insert(kind.as_str()) {
            return Err(CliError::InvalidArgument(format!("duplicate model kind {name:?}")));
        }
        kinds.push(kind);
    }

    let mut manifest = ManifestBuilder::begin("cv");
    manifest.seed(args.seed);
    manifest.input(&args.input)?;

    let ds = load_dataset(&args.input)?;
    let vocab_params = VocabularyParams {
        min_presence_rate: args.min_presence_rate,
        w_dl: args.w_dl,
        w_h: args.w_h,
        tau_name: args.tau_name,
        tau_value: args.tau_value,
    };
    let cv_params = CvParams {
        repeats: args.repeats,
        folds: args.folds,
        seed: args.seed,
        threshold: args.threshold,
    };
    let report = cross_validate(&ds, &vocab_params, &kinds, &cv_params)?;

    println!(
        "{} repeats x {} folds on {} records",
        report.repeats,
        report.folds,
        ds.records.len()
    );
    for (model, summary) in &report.models {
        println!("{model}:");
        for metric in METRIC_NAMES {
            if let (Some(mean), Some(std)) = (summary.mean.get(metric), summary.std.get(metric)) {
                println!(
                    "  {metric:<17} {mean:.4} +/- {std:.4} (n={})",
                    summary.n_evals[metric]
                );
            }
        }
    }

    if let Some(out) = &args.out {
        ensure_parent(out)?;
        write_json_pretty(out, &report)?;
        manifest.output(out)?;
        manifest.finish(out)?;
        println!("cv report written to {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// importance
// ---------------------------------------------------------------------------

pub(super) fn importance(args: ImportanceArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::begin("importance");
    manifest.seed(args.seed);
    manifest.input(&args.model)?;
    manifest.input(&args.matrix)?;

    let clf = Classifier::load(&args.model)?;
    let mat = BinaryFeatureMatrix::load(&args.matrix)?;
    let names: Option<Vec<String>> = match &args.vocab {
        None => None,
        Some(path) => {
            manifest.input(path)?;
            let vocab = HeaderVocabulary::load(path)?;
            let digest = vocab.digest();
            if digest != clf.base().vocabulary_digest {
                return Err(CliError::Model(ModelError::VocabularyDigestMismatch {
                    expected: clf.base().vocabulary_digest.clone(),
                    found: digest,
                }));
            }
            Some(vocab.canonical.clone())
        }
    };

    let (scores, metric) = match args.mode.as_str() {
        "impurity" => (impurity_importance(clf.base())?, None),
        "permutation" => {
            let f = metric_closure(&args.metric, args.threshold)?;
            (
                permutation_importance(&clf, &mat, f.as_ref(), args.reps, args.seed)?,
                Some(args.metric.clone()),
            )
        }
        other => {
            return Err(CliError::InvalidArgument(format!(
                "unknown importance mode {other:?} (expected impurity or permutation)"
            )))
        }
    };

    let mut rows: Vec<ImportanceRow> = scores
        .iter()
        .enumerate()
        .map(|(feature, &score)| ImportanceRow {
            feature,
            name: names.as_ref().map(|n| n[feature].clone()),
            score,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.feature.cmp(&b.feature))
    });

    println!("{} importance, top {}:", args.mode, args.top.min(rows.len()));
    for row in rows.iter().take(args.top) {
        match &row.name {
            Some(name) => println!("  {:.6}  {}", row.score, name),
            None => println!("  {:.6}  feature {}", row.score, row.feature),
        }
    }

    if let Some(out) = &args.out {
        let artifact = ImportanceArtifact {
            v: MANIFEST_VERSION,
            mode: args.mode.clone(),
            metric,
            model_kind: clf.base().kind.to_string(),
            vocabulary_digest: clf.base().vocabulary_digest.clone(),
            rows,
        };
        ensure_parent(out)?;
        write_json_pretty(out, &artifact)?;
        manifest.output(out)?;
        manifest.finish(out)?;
        println!("importance report written to {}", out.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

pub(super) fn report(args: ReportArgs) -> Result<(), CliError> {
    let mut manifest = ManifestBuilder::begin("report");
    let mut rows = Vec::new();
    for path in &args.metrics {
        manifest.input(path)?;
        let artifact: EvaluationArtifact = read_json(path)?;
        rows.push((artifact.tag, artifact.metrics, artifact.bootstrap));
    }
    let table = render_metrics_table(&rows);
    print!("{table}");

    if let Some(out) = &args.out {
        ensure_parent(out)?;
        std::fs::write(out, &table)?;
        manifest.output(out)?;
        manifest.finish(out)?;
        println!("table written to {}", out.display());
    }
    Ok(())
}
