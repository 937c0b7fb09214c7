//! End-to-end evaluation of several configurations on one shared fold plan,
//! and its JSON and plain-text reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::cv::{cross_validate, FoldDetail};
use super::folds::{make_folds, FoldStrategy};
use super::metrics::{imbalance_ratio, ConfusionMatrix, Metrics};
use crate::cohort::LabeledInstance;
use crate::error::Result;
use crate::features::{drop_null_rows, FeatureSchema, NullDropReport, EJECTION_FRACTION};
use crate::pipeline::{Configuration, ModelSettings};
use crate::seed;

pub const REPORT_FORMAT: &str = "readmit-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalSettings {
    pub seed: u64,
    pub folds: usize,
    pub strategy: FoldStrategy,
    pub configurations: Vec<Configuration>,
    /// Run folds on the rayon pool; results are identical either way.
    pub parallel: bool,
    pub model: ModelSettings,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            seed: 42,
            folds: 10,
            strategy: FoldStrategy::Stratified,
            configurations: Configuration::ALL.to_vec(),
            parallel: true,
            model: ModelSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortStats {
    pub instances: usize,
    pub positives: usize,
    pub negatives: usize,
    pub imbalance_ratio: Option<f64>,
    pub null_rows: NullDropReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationReport {
    pub configuration: Configuration,
    pub title: String,
    pub matrix: ConfusionMatrix,
    pub metrics: Metrics,
    pub folds: Vec<FoldDetail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub folds: usize,
    pub strategy: FoldStrategy,
    pub cohort: CohortStats,
    pub results: Vec<ConfigurationReport>,
}

/// Drops rows with missing values outside ejection fraction, builds one
/// fold plan, and cross-validates each requested configuration on it.
pub fn evaluate(
    schema: &FeatureSchema,
    instances: Vec<LabeledInstance>,
    settings: &EvalSettings,
) -> Result<EvaluationReport> {
    settings.model.validate()?;
    let exempt: Vec<usize> = schema.index_of(EJECTION_FRACTION).into_iter().collect();
    let (instances, null_rows) = drop_null_rows(instances, schema, &exempt);
    let labels: Vec<bool> = instances.iter().map(|i| i.label_30).collect();
    let groups: Vec<String> = instances.iter().map(|i| i.patient_id.clone()).collect();
    let plan = make_folds(
        &labels,
        Some(&groups),
        settings.folds,
        seed::derive(settings.seed, &[seed::FOLDS]),
        settings.strategy,
    )?;
    let positives = labels.iter().filter(|&&y| y).count();
    let negatives = labels.len() - positives;

    let mut results = Vec::with_capacity(settings.configurations.len());
    for &c in &settings.configurations {
        log::info!("cross-validating {}", c.title());
        let cv = cross_validate(
            schema,
            &instances,
            c,
            &plan,
            &settings.model,
            settings.seed,
            settings.parallel,
        )?;
        results.push(ConfigurationReport {
            configuration: c,
            title: c.title().to_string(),
            matrix: cv.matrix,
            metrics: cv.matrix.metrics(),
            folds: cv.folds,
        });
    }
    Ok(EvaluationReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        seed: settings.seed,
        folds: settings.folds,
        strategy: plan.strategy,
        cohort: CohortStats {
            instances: instances.len(),
            positives,
            negatives,
            imbalance_ratio: imbalance_ratio(negatives.max(positives), negatives.min(positives)).ok(),
            null_rows,
        },
        results,
    })
}

fn rate(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn result(&self, c: Configuration) -> Option<&ConfigurationReport> {
        self.results.iter().find(|r| r.configuration == c)
    }

    /// One row per configuration: the four confusion cells, then recall,
    /// precision and specificity.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let c = &self.cohort;
        let _ = writeln!(
            out,
            "{} instances, {} readmitted within 30 days, IR {}; {}-fold CV, seed {}",
            c.instances,
            c.positives,
            c.imbalance_ratio.map_or("n/a".into(), |v| format!("{v:.3}")),
            self.folds,
            self.seed
        );
        let _ = writeln!(
            out,
            "{:<14} {:>7} {:>7} {:>7} {:>7} {:>8} {:>9} {:>11}",
            "", "TP", "FP", "TN", "FN", "Recall", "Precision", "Specificity"
        );
        for r in &self.results {
            let m = &r.matrix;
            let _ = writeln!(
                out,
                "{:<14} {:>7} {:>7} {:>7} {:>7} {:>8} {:>9} {:>11}",
                r.title,
                m.tp,
                m.fp,
                m.tn,
                m.fn_,
                rate(r.metrics.recall),
                rate(r.metrics.precision),
                rate(r.metrics.specificity)
            );
        }
        out
    }
}
