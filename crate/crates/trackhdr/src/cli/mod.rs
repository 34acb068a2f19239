//! Command-line interface: the pipeline as composable subcommands that
//! exchange auditable on-disk artifacts (datasets, vocabularies, matrices,
//! models, reports), each stamped with a run manifest.
//!
//! Exit codes: 0 success, 2 usage error (malformed flags), 1 runtime error
//! with a single `ErrorClass: message` line on stderr.

mod commands;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use manifest::{
    CrossEvalArtifact, EvaluationArtifact, FileDigest, ImportanceArtifact, ImportanceRow,
    ManifestBuilder, PipelineManifest, RunManifest,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("ParseError: {0}")]
    Parse(String),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Filter(#[from] crate::filterlist::FilterError),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Model(#[from] crate::models::ModelError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
}

#[derive(Parser)]
#[command(
    name = "trackhdr",
    version,
    about = "HTTP-header tracker classification pipeline",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for parallel stages. Defaults to the TRACKHDR_THREADS
    /// environment variable, then to available parallelism. Thread count
    /// never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse raw capture files into a canonical dataset.
    Ingest(IngestArgs),
    /// Label a dataset tracker/non-tracker by filter-list hostname match.
    Label(LabelArgs),
    /// Descriptive statistics of a labeled dataset.
    Profile(ProfileArgs),
    /// Split, build the header vocabulary, and binarize into matrices.
    Prepare(PrepareArgs),
    /// Train one classifier on a training matrix.
    Train(TrainArgs),
    /// Fit an isotonic calibration layer on a calibration matrix.
    Calibrate(CalibrateArgs),
    /// Score a model on a matrix: metrics, intervals, curve data.
    Evaluate(EvaluateArgs),
    /// Score one model across several labeled datasets (transfer).
    CrossEval(CrossEvalArgs),
    /// Repeated stratified cross-validation with per-fold pipeline rebuild.
    Cv(CvArgs),
    /// Feature importances (impurity or permutation).
    Importance(ImportanceArgs),
    /// Combine evaluation artifacts into one comparison table.
    Report(ReportArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Capture files, concatenated in the order given.
    #[arg(long = "in", required = true, value_name = "FILE")]
    inputs: Vec<PathBuf>,
    /// Source schema: tex_json (browser-extension export) or
    /// canonical_jsonl (this tool's own dataset format).
    #[arg(long, default_value = "tex_json")]
    format: String,
    /// Which header stream feeds the pipeline: response or request.
    #[arg(long, default_value = "response")]
    header_source: String,
    /// Tag stamped on every record (e.g. "chrome_2022"). Required for
    /// tex_json input.
    #[arg(long)]
    browser_tag: Option<String>,
    /// Output dataset path (canonical JSONL).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    /// Input dataset (canonical JSONL).
    #[arg(long = "in")]
    input: PathBuf,
    /// Filter-list files, concatenated in order (rule precedence follows
    /// file order). Repeatable.
    #[arg(long = "filter-list", required = true, value_name = "FILE")]
    filter_lists: Vec<PathBuf>,
    /// Let matching @@ exception rules force non-tracker. Default ignores
    /// exceptions: a host matching any blocking rule is a tracker.
    #[arg(long)]
    honor_exceptions: bool,
    /// Drop records whose hostname contains this substring
    /// (case-insensitive). Repeatable.
    #[arg(long = "exclude-host-substring", value_name = "SUBSTR")]
    exclude: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    /// Labeled dataset to profile.
    #[arg(long = "in")]
    input: PathBuf,
    /// Header whose values get a numeric quartile summary (lowercase).
    /// Repeatable.
    #[arg(long = "value-summary-header", value_name = "NAME")]
    value_headers: Vec<String>,
    /// Write the full report as JSON here (text summary always prints).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PrepareArgs {
    /// Input dataset. Either already labeled, or raw plus --filter-list.
    #[arg(long = "in")]
    input: PathBuf,
    /// Label the input with these filter lists first. Repeatable.
    #[arg(long = "filter-list", value_name = "FILE")]
    filter_lists: Vec<PathBuf>,
    #[arg(long)]
    honor_exceptions: bool,
    /// Drop records whose hostname contains this substring before
    /// anything else. Repeatable.
    #[arg(long = "exclude-host-substring", value_name = "SUBSTR")]
    exclude: Vec<String>,
    /// train,calibration,test fractions; must sum to 1.
    #[arg(long, default_value = "0.7,0.1,0.2")]
    split: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Split without class stratification.
    #[arg(long)]
    no_stratify: bool,
    /// Drop headers present in fewer than this fraction of training rows.
    #[arg(long, default_value_t = 1e-4)]
    min_presence_rate: f64,
    /// Weight of the edit-distance term in fuzzy name similarity.
    #[arg(long, default_value_t = 0.7)]
    w_dl: f64,
    /// Weight of the positional (Hamming) term; w-dl + w-h must be 1.
    #[arg(long, default_value_t = 0.3)]
    w_h: f64,
    /// Minimum name similarity for a fuzzy merge.
    #[arg(long, default_value_t = 0.88)]
    tau_name: f64,
    /// Minimum value-set Jaccard similarity for a fuzzy merge.
    #[arg(long, default_value_t = 0.5)]
    tau_value: f64,
    /// Root for the datasets/, vocab/, matrices/ output layout.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Training matrix (.bfm).
    #[arg(long)]
    matrix: PathBuf,
    /// Model family: decision-tree, random-forest, extra-trees,
    /// naive-bayes, logistic-regression, ada-boost, gradient-boosting, or
    /// a boosting preset profile (gbm, lgbm, histgb, xgboost).
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Uncalibrated model file.
    #[arg(long)]
    model: PathBuf,
    /// Calibration matrix (.bfm) from the same prepare run.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Evaluation matrix (.bfm); its vocabulary digest must match the
    /// model's.
    #[arg(long)]
    matrix: PathBuf,
    /// Decision threshold: predicted tracker when probability >= this.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Bootstrap resamples for confidence intervals; 0 disables.
    #[arg(long, default_value_t = 599)]
    bootstrap: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Artifact name; defaults to "<model-stem>-<matrix-stem>".
    #[arg(long)]
    tag: Option<String>,
    /// Skip the ROC/PR/reliability CSV series.
    #[arg(long)]
    no_curves: bool,
    #[arg(long, default_value = "out/reports")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CrossEvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// The vocabulary the model was trained against (vocabulary.json).
    #[arg(long)]
    vocab: PathBuf,
    /// Labeled dataset to score, as tag=path or bare path (tag = file
    /// stem). Repeatable.
    #[arg(long = "test", required = true, value_name = "TAG=FILE")]
    tests: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Write the per-dataset results as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CvArgs {
    /// Labeled dataset; every fold rebuilds the pipeline from scratch.
    #[arg(long = "in")]
    input: PathBuf,
    /// Model family to cross-validate (default hyperparameters).
    /// Repeatable.
    #[arg(long = "kind", required = true, value_name = "KIND")]
    kinds: Vec<String>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 1e-4)]
    min_presence_rate: f64,
    #[arg(long, default_value_t = 0.7)]
    w_dl: f64,
    #[arg(long, default_value_t = 0.3)]
    w_h: f64,
    #[arg(long, default_value_t = 0.88)]
    tau_name: f64,
    #[arg(long, default_value_t = 0.5)]
    tau_value: f64,
    /// Write the full per-fold results as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImportanceArgs {
    #[arg(long)]
    model: PathBuf,
    /// Matrix to measure on (typically the test matrix).
    #[arg(long)]
    matrix: PathBuf,
    /// impurity (tree models only) or permutation (any model).
    #[arg(long, default_value = "impurity")]
    mode: String,
    /// Metric degraded by permutation: accuracy, balanced-accuracy, f1,
    /// mcc, roc-auc, auprc, or neg-log-loss.
    #[arg(long, default_value = "f1")]
    metric: String,
    /// Permutation repetitions per feature.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Decision threshold for threshold-based permutation metrics.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Vocabulary file; resolves feature indices to header names.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// How many top features to print.
    #[arg(long, default_value_t = 20)]
    top: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Evaluation artifact (.metrics.json) to include. Repeatable; row
    /// order follows argument order.
    #[arg(long = "metrics", required = true, value_name = "FILE")]
    metrics: Vec<PathBuf>,
    /// Also write the rendered table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Entry point behind `fn main`; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version arrive here too, with exit code 0.
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };

    let threads = cli
        .threads
        .or_else(|| std::env::var("TRACKHDR_THREADS").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0); // 0 = rayon's default (available parallelism)
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("InvalidArgument: cannot build a {threads}-thread pool: {e}");
            return 1;
        }
    };

    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            // One machine-parseable line: "ErrorClass: message".
            eprintln!("{}", e.to_string().replace('\n', " "));
            1
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(args) => commands::ingest(args),
        Command::Label(args) => commands::label(args),
        Command::Profile(args) => commands::profile(args),
        Command::Prepare(args) => commands::prepare(args),
        Command::Train(args) => commands::train(args),
        Command::Calibrate(args) => commands::calibrate(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::CrossEval(args) => commands::cross_eval(args),
        Command::Cv(args) => commands::cv(args),
        Command::Importance(args) => commands::importance(args),
        Command::Report(args) => commands::report(args),
    }
}
