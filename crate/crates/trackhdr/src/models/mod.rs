//! Classifier families trained on binary header-presence features, all
//! implemented from first principles: a single decision tree, bagged and
//! extremely randomized forests, naive Bayes, logistic regression,
//! adaptive boosting, gradient boosting, and isotonic calibration on top
//! of any of them.
//!
//! Every fit is a pure function of (matrix, params, seed). Randomized
//! learners draw from counter-mode RNG streams keyed by ensemble-member
//! index, so results do not depend on thread count or call order.

pub mod boost;
pub mod forest;
pub mod importance;
pub mod isotonic;
pub mod linear;
pub mod nb;
pub mod tree;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::BinaryFeatureMatrix;
use boost::{AdaBoostModel, AdaBoostParams, GbModel, GradientBoostingParams};
use forest::{forest_predict_proba, fit_forest, ForestParams};
use isotonic::{fit_isotonic, IsotonicMapping};
use linear::{fit_logistic, LinearModel, LogisticParams};
use nb::{fit_nb, NbModel, NbParams};
use tree::{DecisionTree, TreeParams};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("SchemaVersionError: unsupported schema version {found} (expected 1)")]
    SchemaVersion { found: String },
    #[error("EmptyMatrix: cannot train on a matrix with no rows")]
    EmptyMatrix,
    #[error("VocabularyDigestMismatch: model built against {expected}, matrix against {found}")]
    VocabularyDigestMismatch { expected: String, found: String },
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("SingleClassCalibration: calibration split contains a single class")]
    SingleClassCalibration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    DecisionTree,
    RandomForest,
    ExtraTrees,
    NaiveBayes,
    LogisticRegression,
    AdaBoost,
    GradientBoosting,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::ExtraTrees,
        ModelKind::NaiveBayes,
        ModelKind::LogisticRegression,
        ModelKind::AdaBoost,
        ModelKind::GradientBoosting,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "decision-tree",
            ModelKind::RandomForest => "random-forest",
            ModelKind::ExtraTrees => "extra-trees",
            ModelKind::NaiveBayes => "naive-bayes",
            ModelKind::LogisticRegression => "logistic-regression",
            ModelKind::AdaBoost => "ada-boost",
            ModelKind::GradientBoosting => "gradient-boosting",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| {
                ModelError::InvalidParameter(format!(
                    "unknown model kind {s:?}; expected one of {}",
                    ModelKind::ALL.map(|k| k.as_str()).join(", ")
                ))
            })
    }
}

/// Hyperparameters, one variant per model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParams {
    Tree(TreeParams),
    Forest(ForestParams),
    NaiveBayes(NbParams),
    Logistic(LogisticParams),
    AdaBoost(AdaBoostParams),
    GradientBoosting(GradientBoostingParams),
}

impl ModelParams {
    pub fn defaults_for(kind: ModelKind) -> ModelParams {
        match kind {
            ModelKind::DecisionTree => ModelParams::Tree(TreeParams::default()),
            ModelKind::RandomForest => ModelParams::Forest(ForestParams::bagged()),
            ModelKind::ExtraTrees => ModelParams::Forest(ForestParams::extremely_randomized()),
            ModelKind::NaiveBayes => ModelParams::NaiveBayes(NbParams::default()),
            ModelKind::LogisticRegression => ModelParams::Logistic(LogisticParams::default()),
            ModelKind::AdaBoost => ModelParams::AdaBoost(AdaBoostParams::default()),
            ModelKind::GradientBoosting => {
                ModelParams::GradientBoosting(GradientBoostingParams::default())
            }
        }
    }

    fn matches_kind(&self, kind: ModelKind) -> bool {
        matches!(
            (self, kind),
            (ModelParams::Tree(_), ModelKind::DecisionTree)
                | (ModelParams::Forest(_), ModelKind::RandomForest)
                | (ModelParams::Forest(_), ModelKind::ExtraTrees)
                | (ModelParams::NaiveBayes(_), ModelKind::NaiveBayes)
                | (ModelParams::Logistic(_), ModelKind::LogisticRegression)
                | (ModelParams::AdaBoost(_), ModelKind::AdaBoost)
                | (ModelParams::GradientBoosting(_), ModelKind::GradientBoosting)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelState {
    Tree(DecisionTree),
    Forest(Vec<DecisionTree>),
    NaiveBayes(NbModel),
    Linear(LinearModel),
    AdaBoost(AdaBoostModel),
    GradientBoosted(GbModel),
    /// Fallback fitted when training data held a single class: always
    /// predicts the training prior.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub kind: ModelKind,
    pub params: ModelParams,
    pub state: ModelState,
    pub dim: usize,
    pub vocabulary_digest: String,
    pub seed: u64,
    pub warnings: Vec<String>,
}

pub fn train_classifier(
    mat: &BinaryFeatureMatrix,
    kind: ModelKind,
    params: Option<ModelParams>,
    seed: u64,
) -> Result<TrainedClassifier, ModelError> {
    if mat.n_rows == 0 {
        return Err(ModelError::EmptyMatrix);
    }
    let params = params.unwrap_or_else(|| ModelParams::defaults_for(kind));
    if !params.matches_kind(kind) {
        return Err(ModelError::InvalidParameter(format!(
            "hyperparameters do not fit model kind {kind}"
        )));
    }

    let mut warnings = Vec::new();
    let (n_tracker, n_nontracker) = mat.class_counts();
    let state = if n_tracker == 0 || n_nontracker == 0 {
        let prior = n_tracker as f64 / mat.n_rows as f64;
        warnings.push(format!(
            "training set contains a single class; fitted a constant predictor ({prior})"
        ));
        ModelState::Constant(prior)
    } else {
        let rows = &mat.rows;
        let labels = &mat.labels;
        let dim = mat.dim;
        match (&params, kind) {
            (ModelParams::Tree(p), _) => {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                ModelState::Tree(DecisionTree::fit(rows, labels, None, dim, p, &mut rng))
            }
            (ModelParams::Forest(p), _) => {
                ModelState::Forest(fit_forest(rows, labels, dim, p, seed))
            }
            (ModelParams::NaiveBayes(p), _) => ModelState::NaiveBayes(fit_nb(rows, labels, dim, p)?),
            (ModelParams::Logistic(p), _) => {
                let (model, diag) = fit_logistic(rows, labels, dim, p)?;
                if !diag.converged {
                    warnings.push(format!(
                        "optimizer stopped after {} iterations with gradient norm {:.3e}",
                        diag.iterations, diag.grad_norm
                    ));
                }
                ModelState::Linear(model)
            }
            (ModelParams::AdaBoost(p), _) => {
                let model = boost::fit_adaboost(rows, labels, dim, p, seed);
                if model.stumps.is_empty() {
                    warnings.push(
                        "no boosting round beat chance; predictions fall back to 0.5".into(),
                    );
                }
                ModelState::AdaBoost(model)
            }
            (ModelParams::GradientBoosting(p), _) => {
                let (model, diag) = boost::fit_gradient_boosting(rows, labels, dim, p)?;
                if diag.stopped_early {
                    warnings.push(format!(
                        "boosting stopped after {} stages; the next stage could not lower training loss",
                        model.trees.len()
                    ));
                }
                ModelState::GradientBoosted(model)
            }
        }
    };

    Ok(TrainedClassifier {
        kind,
        params,
        state,
        dim: mat.dim,
        vocabulary_digest: mat.vocabulary_digest.clone(),
        seed,
        warnings,
    })
}

impl TrainedClassifier {
    fn check_compatible(&self, mat: &BinaryFeatureMatrix) -> Result<(), ModelError> {
        if mat.vocabulary_digest != self.vocabulary_digest {
            return Err(ModelError::VocabularyDigestMismatch {
                expected: self.vocabulary_digest.clone(),
                found: mat.vocabulary_digest.clone(),
            });
        }
        if mat.dim != self.dim {
            return Err(ModelError::DimensionMismatch(format!(
                "model expects {} features, matrix has {}",
                self.dim, mat.dim
            )));
        }
        Ok(())
    }

    fn predict_row(&self, row: &[u32]) -> f64 {
        match &self.state {
            ModelState::Tree(t) => t.predict_proba(row),
            ModelState::Forest(trees) => forest_predict_proba(trees, row),
            ModelState::NaiveBayes(m) => m.predict_proba(row),
            ModelState::Linear(m) => m.predict_proba(row),
            ModelState::AdaBoost(m) => m.predict_proba(row),
            ModelState::GradientBoosted(m) => m.predict_proba(row),
            ModelState::Constant(p) => *p,
        }
    }

    /// Tracker probability for every row of the matrix.
    pub fn predict_proba(&self, mat: &BinaryFeatureMatrix) -> Result<Vec<f64>, ModelError> {
        self.check_compatible(mat)?;
        Ok(mat.rows.par_iter().map(|row| self.predict_row(row)).collect())
    }
}

/// A trained model plus optional isotonic calibration, as persisted on
/// disk and consumed by evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    Plain(TrainedClassifier),
    Calibrated { base: TrainedClassifier, mapping: IsotonicMapping },
}

const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    v: u32,
    classifier: Classifier,
}

impl Classifier {
    pub fn base(&self) -> &TrainedClassifier {
        match self {
            Classifier::Plain(c) => c,
            Classifier::Calibrated { base, .. } => base,
        }
    }

    pub fn is_calibrated(&self) -> bool {
        matches!(self, Classifier::Calibrated { .. })
    }

    pub fn predict_proba(&self, mat: &BinaryFeatureMatrix) -> Result<Vec<f64>, ModelError> {
        match self {
            Classifier::Plain(c) => c.predict_proba(mat),
            Classifier::Calibrated { base, mapping } => {
                let raw = base.predict_proba(mat)?;
                Ok(raw.into_iter().map(|p| mapping.apply(p)).collect())
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let file = ModelFile { v: MODEL_SCHEMA_VERSION, classifier: self.clone() };
        let mut out = serde_json::to_string(&file)
            .map_err(|e| ModelError::Parse(format!("serializing model: {e}")))?;
        out.push('\n');
        let mut f = fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Classifier, ModelError> {
        let text = fs::read_to_string(path)?;
        let probe: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| ModelError::Parse(format!("{}: {e}", path.display())))?;
        let v = probe.get("v").and_then(|v| v.as_u64());
        if v != Some(u64::from(MODEL_SCHEMA_VERSION)) {
            return Err(ModelError::SchemaVersion {
                found: v.map_or_else(|| "missing".to_string(), |x| x.to_string()),
            });
        }
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| ModelError::Parse(format!("{}: {e}", path.display())))?;
        Ok(file.classifier)
    }
}

/// Fits an isotonic map from the base model's raw scores on the
/// calibration split to its labels.
pub fn calibrate_classifier(
    base: TrainedClassifier,
    calib: &BinaryFeatureMatrix,
) -> Result<Classifier, ModelError> {
    let (n_tracker, n_nontracker) = calib.class_counts();
    if n_tracker == 0 || n_nontracker == 0 {
        return Err(ModelError::SingleClassCalibration);
    }
    let raw = base.predict_proba(calib)?;
    let targets: Vec<f64> = calib.labels.iter().map(|&y| f64::from(y)).collect();
    let mapping = fit_isotonic(&raw, &targets, None)?;
    Ok(Classifier::Calibrated { base, mapping })
}
