//! Three-layer cascade for the 30-day readmission task.
//!
//! Layer 1 asks whether a patient is ever readmitted, layer 2 whether it
//! happens within `T` days, layer 3 whether it happens within 30 days. A
//! negative answer at any layer ends the prediction as negative; only
//! patients that pass every layer are flagged.
//!
//! Each layer trains on its own slice of the data (everyone, the readmitted,
//! those readmitted within `T`), selects its own features on that slice, and
//! may use its own classifier kind.

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierKind, ClassifierParams, Prediction, TrainedClassifier};
use crate::cohort::LabeledInstance;
use crate::error::{Error, Result};
use crate::eval::imbalance_ratio;
use crate::features::{select_features, FeatureSchema, FeatureSelection, FeatureVector, DEFAULT_K};
use crate::seed;

pub const SHORT_WINDOW: u32 = 30;
pub const CLASSIC_LAYER2_THRESHOLD: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerTarget {
    Ever,
    WithinThreshold,
    WithinShort,
}

impl LayerTarget {
    pub fn of_layer(layer: u8) -> Self {
        match layer {
            1 => LayerTarget::Ever,
            2 => LayerTarget::WithinThreshold,
            3 => LayerTarget::WithinShort,
            _ => panic!("cascade layers are numbered 1 to 3, got {layer}"),
        }
    }

    pub fn label(self, inst: &LabeledInstance, threshold: u32) -> bool {
        match self {
            LayerTarget::Ever => inst.label_ever,
            LayerTarget::WithinThreshold => inst.within(threshold),
            LayerTarget::WithinShort => inst.within(SHORT_WINDOW),
        }
    }
}

/// Per-layer tunables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayerSettings {
    pub k: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for LayerSettings {
    fn default() -> Self {
        let p = ClassifierParams::default();
        LayerSettings {
            k: DEFAULT_K,
            alpha: p.alpha,
            lambda: p.svm.lambda,
            epochs: p.svm.epochs,
        }
    }
}

impl LayerSettings {
    pub fn params(&self) -> ClassifierParams {
        ClassifierParams {
            alpha: self.alpha,
            svm: crate::classifiers::SvmParams {
                lambda: self.lambda,
                epochs: self.epochs,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub layer: u8,
    pub target: LayerTarget,
    pub classifier: ClassifierKind,
    pub settings: LayerSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Pick the layer-2 threshold that balances that layer's classes.
    Balance,
    Fixed(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub layers: [LayerSpec; 3],
    pub threshold: ThresholdRule,
}

impl CascadeSpec {
    pub fn new(kinds: [ClassifierKind; 3], settings: [LayerSettings; 3], threshold: ThresholdRule) -> Self {
        let layers = [1u8, 2, 3].map(|l| LayerSpec {
            layer: l,
            target: LayerTarget::of_layer(l),
            classifier: kinds[l as usize - 1],
            settings: settings[l as usize - 1],
        });
        CascadeSpec { layers, threshold }
    }

    /// Naive Bayes in every layer.
    pub fn mlc1() -> Self {
        Self::new([ClassifierKind::Nb; 3], [LayerSettings::default(); 3], ThresholdRule::Balance)
    }

    /// Naive Bayes in the two coarse layers, linear SVM in the last.
    pub fn mlc2() -> Self {
        Self::new(
            [ClassifierKind::Nb, ClassifierKind::Nb, ClassifierKind::Svm],
            [LayerSettings::default(); 3],
            ThresholdRule::Balance,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (i, spec) in self.layers.iter().enumerate() {
            if spec.layer as usize != i + 1 || spec.target != LayerTarget::of_layer(spec.layer) {
                return Err(Error::Config(format!("layer {} is misnumbered or mistargeted", i + 1)));
            }
            spec.settings.validate()?;
        }
        if let ThresholdRule::Fixed(t) = self.threshold {
            if t <= SHORT_WINDOW {
                return Err(Error::Config(format!(
                    "layer-2 threshold must exceed {SHORT_WINDOW} days, got {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Training slice for one layer: everyone for layer 1, the readmitted for
/// layer 2, those readmitted within `threshold` days for layer 3. Fails if
/// the slice is empty or holds a single class.
pub fn refine_training_data(
    instances: &[LabeledInstance],
    layer: u8,
    threshold: u32,
) -> Result<Vec<&LabeledInstance>> {
    let refined: Vec<&LabeledInstance> = match layer {
        1 => instances.iter().collect(),
        2 => instances.iter().filter(|i| i.label_ever).collect(),
        3 => instances.iter().filter(|i| i.within(threshold)).collect(),
        _ => return Err(Error::Config(format!("no cascade layer {layer}"))),
    };
    let target = LayerTarget::of_layer(layer);
    let positives = refined.iter().filter(|i| target.label(i, threshold)).count();
    if refined.is_empty() {
        return Err(Error::Degenerate("no training instances after refinement".into()).in_layer(layer));
    }
    if positives == 0 || positives == refined.len() {
        return Err(Error::Degenerate(format!(
            "all {} refined training instances are {}",
            refined.len(),
            if positives == 0 { "negative" } else { "positive" }
        ))
        .in_layer(layer));
    }
    Ok(refined)
}

/// Smallest integer `T` above the short window whose split of the observed
/// readmission days is closest to balanced.
pub fn balance_threshold(readmitted_days: &[u32]) -> Result<u32> {
    let mut days = readmitted_days.to_vec();
    days.sort_unstable();
    let distinct = days.windows(2).filter(|w| w[0] != w[1]).count() + usize::from(!days.is_empty());
    if distinct < 2 {
        return Err(Error::Degenerate(format!(
            "need at least two distinct readmission day values, got {distinct}"
        )));
    }
    let max = *days.last().unwrap();
    // (majority, minority, T); IR comparisons by cross-multiplication
    let mut best: Option<(u64, u64, u32)> = None;
    for t in SHORT_WINDOW + 1..max {
        let below = days.partition_point(|&d| d <= t) as u64;
        let above = days.len() as u64 - below;
        if below == 0 || above == 0 {
            continue;
        }
        let (maj, min) = (below.max(above), below.min(above));
        let better = match best {
            None => true,
            Some((bmaj, bmin, _)) => maj * bmin < bmaj * min,
        };
        if better {
            best = Some((maj, min, t));
        }
    }
    best.map(|(_, _, t)| t).ok_or_else(|| {
        Error::Degenerate(format!(
            "no threshold above {SHORT_WINDOW} days leaves readmissions on both sides"
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerModel {
    pub layer: u8,
    pub selection: FeatureSelection,
    pub classifier: TrainedClassifier,
    pub train_size: usize,
    pub train_positives: usize,
}

impl LayerModel {
    /// Selects features on `rows` and fits the classifier on that selection.
    pub fn fit(
        schema: &FeatureSchema,
        layer: u8,
        rows: &[FeatureVector],
        labels: &[bool],
        kind: ClassifierKind,
        settings: &LayerSettings,
        seed: u64,
    ) -> Result<Self> {
        let selection = select_features(schema, rows, labels, settings.k, layer);
        let classifier = TrainedClassifier::fit(
            kind,
            schema,
            rows,
            labels,
            &selection.indices(),
            &settings.params(),
            seed,
        )
        .map_err(|e| e.in_layer(layer))?;
        Ok(LayerModel {
            layer,
            selection,
            classifier,
            train_size: rows.len(),
            train_positives: labels.iter().filter(|&&y| y).count(),
        })
    }

    pub fn predict(&self, vector: &FeatureVector) -> Prediction {
        self.classifier.predict(vector)
    }

    /// Majority over minority count of this layer's training labels.
    pub fn imbalance_ratio(&self) -> Option<f64> {
        let neg = self.train_size - self.train_positives;
        let (maj, min) = (neg.max(self.train_positives), neg.min(self.train_positives));
        imbalance_ratio(maj, min).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeModel {
    pub layers: [LayerModel; 3],
    /// Layer-2 window in days.
    pub threshold: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerDecision {
    pub layer: u8,
    pub prediction: Prediction,
}

/// Final 30-day prediction plus the layers that were consulted, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeOutcome {
    pub prediction: Prediction,
    pub path: Vec<LayerDecision>,
}

pub fn cascade_train(
    schema: &FeatureSchema,
    train: &[LabeledInstance],
    spec: &CascadeSpec,
    seed: u64,
) -> Result<CascadeModel> {
    spec.validate()?;
    let threshold = match spec.threshold {
        ThresholdRule::Fixed(t) => t,
        ThresholdRule::Balance => {
            let days: Vec<u32> = train.iter().filter_map(|i| i.days_to_readmission).collect();
            balance_threshold(&days).map_err(|e| e.in_layer(2))?
        }
    };
    let mut layers = Vec::with_capacity(3);
    for spec in &spec.layers {
        let refined = refine_training_data(train, spec.layer, threshold)?;
        let rows: Vec<FeatureVector> = refined.iter().map(|i| i.features.clone()).collect();
        let labels: Vec<bool> = refined
            .iter()
            .map(|i| spec.target.label(i, threshold))
            .collect();
        layers.push(LayerModel::fit(
            schema,
            spec.layer,
            &rows,
            &labels,
            spec.classifier,
            &spec.settings,
            seed::derive(seed, &[spec.layer as u64]),
        )?);
    }
    let layers: [LayerModel; 3] = layers.try_into().expect("three layers");
    Ok(CascadeModel { layers, threshold })
}

pub fn cascade_predict(model: &CascadeModel, vector: &FeatureVector) -> CascadeOutcome {
    let mut path = Vec::with_capacity(3);
    for layer in &model.layers {
        let p = layer.predict(vector);
        path.push(LayerDecision {
            layer: layer.layer,
            prediction: p,
        });
        if !p.label {
            // rejected: rank below the final layer's decision threshold
            let final_kind = model.layers[2].classifier.kind();
            let confidence = layer.classifier.kind().rejection_confidence(p);
            let score = final_kind.threshold() - confidence;
            return CascadeOutcome {
                prediction: Prediction { label: false, score },
                path,
            };
        }
    }
    CascadeOutcome {
        prediction: path[2].prediction,
        path,
    }
}

impl CascadeModel {
    pub fn predict(&self, vector: &FeatureVector) -> CascadeOutcome {
        cascade_predict(self, vector)
    }

    /// Imbalance ratio of each layer's training population.
    pub fn layer_irs(&self) -> [Option<f64>; 3] {
        [0, 1, 2].map(|i| self.layers[i].imbalance_ratio())
    }

    pub fn train_sizes(&self) -> [usize; 3] {
        [0, 1, 2].map(|i| self.layers[i].train_size)
    }
}
