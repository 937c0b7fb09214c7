//! Layer classifiers behind one fit/predict surface.

pub mod nb;
pub mod svm;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{FeatureSchema, FeatureVector, SvmEncoder};
pub use nb::{Conditional, NbModel, DEFAULT_ALPHA};
pub use svm::{SvmModel, SvmParams};

/// A binary decision with its score: the positive posterior for naive
/// Bayes, the signed margin for the SVM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: bool,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Nb,
    Svm,
}

impl ClassifierKind {
    /// Score at which the decision flips.
    pub fn threshold(self) -> f64 {
        match self {
            ClassifierKind::Nb => 0.5,
            ClassifierKind::Svm => 0.0,
        }
    }

    /// How strongly a negative prediction rejects; always positive.
    pub fn rejection_confidence(self, p: Prediction) -> f64 {
        match self {
            ClassifierKind::Nb => 1.0 - p.score,
            ClassifierKind::Svm => -p.score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub alpha: f64,
    pub svm: SvmParams,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            alpha: DEFAULT_ALPHA,
            svm: SvmParams::default(),
        }
    }
}

/// A fitted classifier together with its input encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedClassifier {
    Nb { model: NbModel },
    Svm { encoder: SvmEncoder, model: SvmModel },
}

impl TrainedClassifier {
    #[allow(clippy::too_many_arguments)]
    pub fn fit(
        kind: ClassifierKind,
        schema: &FeatureSchema,
        rows: &[FeatureVector],
        labels: &[bool],
        features: &[usize],
        params: &ClassifierParams,
        seed: u64,
    ) -> Result<Self> {
        match kind {
            ClassifierKind::Nb => Ok(TrainedClassifier::Nb {
                model: NbModel::train(schema, rows, labels, features, params.alpha)?,
            }),
            ClassifierKind::Svm => {
                let encoder = SvmEncoder::fit(schema, rows, features);
                let xs: Vec<Vec<f64>> = rows.iter().map(|r| encoder.encode(r)).collect();
                let model = SvmModel::train(&xs, labels, params.svm, seed)?;
                Ok(TrainedClassifier::Svm { encoder, model })
            }
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedClassifier::Nb { .. } => ClassifierKind::Nb,
            TrainedClassifier::Svm { .. } => ClassifierKind::Svm,
        }
    }

    pub fn predict(&self, vector: &FeatureVector) -> Prediction {
        match self {
            TrainedClassifier::Nb { model } => model.predict(vector),
            TrainedClassifier::Svm { encoder, model } => model
                .predict(&encoder.encode(vector))
                .expect("encoder output matches model dimension"),
        }
    }
}
