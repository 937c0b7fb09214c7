//! Cross-validated evaluation, confusion-matrix accounting and reports.

pub mod cv;
pub mod folds;
pub mod metrics;
pub mod report;

pub use cv::{cross_validate, fit_fold, fold_seed, CvResult, FoldDetail, LayerSummary};
pub use folds::{make_folds, FoldPlan, FoldStrategy};
pub use metrics::{imbalance_ratio, is_imbalanced, metrics, ConfusionMatrix, Metrics};
pub use report::{evaluate, EvalSettings, EvaluationReport};
