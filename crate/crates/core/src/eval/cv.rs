//! K-fold cross-validation: every instance is predicted exactly once by a
//! model that never saw it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::metrics::ConfusionMatrix;
use crate::classifiers::Prediction;
use crate::cohort::LabeledInstance;
use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::pipeline::{Configuration, ModelSettings, TrainedPipeline};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layer: u8,
    pub train_size: usize,
    pub train_positives: usize,
    pub imbalance_ratio: Option<f64>,
    pub selected: Vec<String>,
    /// Test instances that reached this layer, and how many it passed on.
    pub reached: usize,
    pub passed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldDetail {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub matrix: ConfusionMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer2_threshold: Option<u32>,
    pub layers: Vec<LayerSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub configuration: Configuration,
    pub matrix: ConfusionMatrix,
    pub folds: Vec<FoldDetail>,
    /// Held-out prediction per instance, aligned with the input.
    #[serde(skip)]
    pub predictions: Vec<Prediction>,
}

/// Seed used to train `fold` under `root`.
pub fn fold_seed(root: u64, fold: usize) -> u64 {
    seed::derive(root, &[seed::TRAIN, fold as u64])
}

/// Trains the model for one fold on the other folds' instances.
pub fn fit_fold(
    schema: &FeatureSchema,
    instances: &[LabeledInstance],
    plan: &FoldPlan,
    fold: usize,
    configuration: Configuration,
    settings: &ModelSettings,
    root_seed: u64,
) -> Result<TrainedPipeline> {
    let train: Vec<LabeledInstance> = plan
        .train_indices(fold)
        .into_iter()
        .map(|i| instances[i].clone())
        .collect();
    TrainedPipeline::fit(schema, &train, configuration, settings, fold_seed(root_seed, fold)).map_err(
        |e| Error::Fold {
            configuration: configuration.to_string(),
            fold,
            source: Box::new(e),
        },
    )
}

fn run_fold(
    schema: &FeatureSchema,
    instances: &[LabeledInstance],
    plan: &FoldPlan,
    fold: usize,
    configuration: Configuration,
    settings: &ModelSettings,
    root_seed: u64,
) -> Result<(FoldDetail, Vec<(usize, Prediction)>)> {
    let model = fit_fold(schema, instances, plan, fold, configuration, settings, root_seed)?;
    let test = plan.test_indices(fold);
    let mut matrix = ConfusionMatrix::default();
    let mut reached = [0usize; 3];
    let mut passed = [0usize; 3];
    let mut preds = Vec::with_capacity(test.len());
    for &i in &test {
        let (p, route) = model.predict_traced(&instances[i].features);
        matrix.record(instances[i].label_30, p.label);
        match route {
            Some(route) => {
                for d in &route.path {
                    reached[d.layer as usize - 1] += 1;
                    passed[d.layer as usize - 1] += d.prediction.label as usize;
                }
            }
            None => {
                reached[0] += 1;
                passed[0] += p.label as usize;
            }
        }
        preds.push((i, p));
    }
    let summary = |l: &crate::cascade::LayerModel, idx: usize| LayerSummary {
        layer: l.layer,
        train_size: l.train_size,
        train_positives: l.train_positives,
        imbalance_ratio: l.imbalance_ratio(),
        selected: l.selection.names().into_iter().map(String::from).collect(),
        reached: reached[idx],
        passed: passed[idx],
    };
    let (layers, layer2_threshold) = match &model.predictor {
        crate::pipeline::Predictor::Single { layer } => (vec![summary(layer, 0)], None),
        crate::pipeline::Predictor::Cascade { model } => (
            model.layers.iter().enumerate().map(|(i, l)| summary(l, i)).collect(),
            Some(model.threshold),
        ),
    };
    Ok((
        FoldDetail {
            fold,
            train_size: instances.len() - test.len(),
            test_size: test.len(),
            matrix,
            layer2_threshold,
            layers,
        },
        preds,
    ))
}

/// Runs every fold of `plan` and pools the held-out predictions into one
/// matrix. Folds run in parallel unless `parallel` is false; the result is
/// the same either way.
pub fn cross_validate(
    schema: &FeatureSchema,
    instances: &[LabeledInstance],
    configuration: Configuration,
    plan: &FoldPlan,
    settings: &ModelSettings,
    root_seed: u64,
    parallel: bool,
) -> Result<CvResult> {
    if plan.len() != instances.len() {
        return Err(Error::Internal(format!(
            "fold plan covers {} instances, data has {}",
            plan.len(),
            instances.len()
        )));
    }
    let run = |f| run_fold(schema, instances, plan, f, configuration, settings, root_seed);
    let results: Vec<Result<_>> = if parallel {
        (0..plan.k).into_par_iter().map(run).collect()
    } else {
        (0..plan.k).map(run).collect()
    };
    let mut matrix = ConfusionMatrix::default();
    let mut folds = Vec::with_capacity(plan.k);
    let mut predictions = vec![Prediction { label: false, score: 0.0 }; instances.len()];
    for r in results {
        let (detail, preds) = r?;
        matrix += detail.matrix;
        for (i, p) in preds {
            predictions[i] = p;
        }
        folds.push(detail);
    }
    Ok(CvResult {
        configuration,
        matrix,
        folds,
        predictions,
    })
}
