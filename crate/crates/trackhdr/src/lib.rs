//! End-to-end toolkit for classifying web trackers from HTTP response
//! headers.
//!
//! The pipeline: ingest browser capture files into a canonical dataset
//! ([`ingest`]), label each response by matching its hostname against
//! blocklist filter rules ([`filterlist`]), split the data and reduce the
//! observed header names to a training-derived vocabulary whose presence
//! bits become sparse binary features ([`features`]), train and calibrate
//! classifiers built from scratch ([`models`]), and evaluate them with an
//! imbalance-aware metric suite, bootstrap confidence intervals,
//! cross-validation, and cross-dataset transfer ([`eval`]).
//!
//! Every stage is deterministic for a fixed seed: rerunning a command with
//! the same inputs produces byte-identical artifacts.
//!
//! The `examples/` directory is the front door — one runnable example per
//! capability:
//!
//! * `ingest_profile` — parse a capture, label it, print dataset statistics
//! * `filter_match` — filter-rule parsing and hostname matching up close
//! * `prepare_features` — split, vocabulary reduction, binarization
//! * `train_models` — train every classifier family and compare metrics
//! * `calibrate` — isotonic calibration and its effect on log-loss
//! * `cross_browser` — train on one capture source, test on another
//! * `cross_validation` — repeated stratified CV with aggregate statistics
//! * `feature_importance` — impurity- and permutation-based rankings
//!
//! The same functionality is scriptable through the thin `trackhdr` binary
//! (see [`cli`]).

pub mod cli;
pub mod eval;
pub mod features;
pub mod filterlist;
pub mod ingest;
pub mod models;
pub(crate) mod util;

pub use ingest::IngestError;
pub use features::FeatureError;
pub use filterlist::FilterError;
pub use models::ModelError;
pub use eval::EvalError;
