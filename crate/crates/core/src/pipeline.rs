//! The four evaluated configurations and the fitted pipeline that carries
//! imputation and the predictor together.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cascade::{
    cascade_train, CascadeModel, CascadeOutcome, CascadeSpec, LayerModel, LayerSettings,
    ThresholdRule, SHORT_WINDOW,
};
use crate::classifiers::{ClassifierKind, Prediction};
use crate::cohort::LabeledInstance;
use crate::error::{Error, Result};
use crate::features::{FeatureSchema, FeatureVector, Imputer, Statistic, EJECTION_FRACTION};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Configuration {
    /// Single naive Bayes on the 30-day label.
    Nb,
    /// Single linear SVM on the 30-day label.
    Svm,
    /// Cascade, naive Bayes in every layer.
    Mlc1,
    /// Cascade, naive Bayes, naive Bayes, SVM.
    Mlc2,
}

impl Configuration {
    pub const ALL: [Configuration; 4] = [
        Configuration::Nb,
        Configuration::Svm,
        Configuration::Mlc1,
        Configuration::Mlc2,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Configuration::Nb => "nb",
            Configuration::Svm => "svm",
            Configuration::Mlc1 => "mlc1",
            Configuration::Mlc2 => "mlc2",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Configuration::Nb => "Baseline NB",
            Configuration::Svm => "Baseline SVM",
            Configuration::Mlc1 => "MLC1",
            Configuration::Mlc2 => "MLC2",
        }
    }

    pub fn is_cascade(self) -> bool {
        matches!(self, Configuration::Mlc1 | Configuration::Mlc2)
    }

    /// Parses a comma-separated list such as `nb,mlc2`.
    pub fn parse_list(text: &str) -> Result<Vec<Configuration>> {
        let mut out: Vec<Configuration> = Vec::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let c: Configuration = part.parse()?;
            if !out.contains(&c) {
                out.push(c);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no configurations selected".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Configuration {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nb" => Ok(Configuration::Nb),
            "svm" => Ok(Configuration::Svm),
            "mlc1" => Ok(Configuration::Mlc1),
            "mlc2" => Ok(Configuration::Mlc2),
            other => Err(Error::Config(format!(
                "unknown configuration `{other}` (expected nb, svm, mlc1 or mlc2)"
            ))),
        }
    }
}

/// Hyperparameters shared by every configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub baseline: LayerSettings,
    pub layers: [LayerSettings; 3],
    /// Fixed layer-2 window; unset means choose it by balancing.
    pub layer2_threshold: Option<u32>,
    pub imputation: Statistic,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            baseline: LayerSettings::default(),
            layers: [LayerSettings::default(); 3],
            layer2_threshold: None,
            imputation: Statistic::Mean,
        }
    }
}

impl ModelSettings {
    pub fn threshold_rule(&self) -> ThresholdRule {
        self.layer2_threshold
            .map_or(ThresholdRule::Balance, ThresholdRule::Fixed)
    }

    pub fn cascade_spec(&self, configuration: Configuration) -> Option<CascadeSpec> {
        let kinds = match configuration {
            Configuration::Mlc1 => [ClassifierKind::Nb; 3],
            Configuration::Mlc2 => [ClassifierKind::Nb, ClassifierKind::Nb, ClassifierKind::Svm],
            _ => return None,
        };
        Some(CascadeSpec::new(kinds, self.layers, self.threshold_rule()))
    }

    pub fn validate(&self) -> Result<()> {
        self.baseline.validate()?;
        for l in &self.layers {
            l.validate()?;
        }
        if let Some(t) = self.layer2_threshold {
            if t <= SHORT_WINDOW {
                return Err(Error::Config(format!(
                    "layer2_threshold must exceed {SHORT_WINDOW}, got {t}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Predictor {
    Single { layer: LayerModel },
    Cascade { model: Box<CascadeModel> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub configuration: Configuration,
    pub imputer: Option<Imputer>,
    pub predictor: Predictor,
}

impl TrainedPipeline {
    /// Fits imputation on `train`, then the configuration's model on the
    /// imputed rows. Nothing outside `train` is consulted.
    pub fn fit(
        schema: &FeatureSchema,
        train: &[LabeledInstance],
        configuration: Configuration,
        settings: &ModelSettings,
        seed: u64,
    ) -> Result<Self> {
        settings.validate()?;
        let imputer = match schema.index_of(EJECTION_FRACTION) {
            Some(f) => {
                let rows: Vec<FeatureVector> = train.iter().map(|i| i.features.clone()).collect();
                Some(Imputer::fit(&rows, f, settings.imputation)?)
            }
            None => None,
        };
        let imputed: Vec<LabeledInstance> = train
            .iter()
            .map(|i| {
                let mut i = i.clone();
                if let Some(imp) = &imputer {
                    imp.apply(&mut i.features);
                }
                i
            })
            .collect();

        let predictor = match settings.cascade_spec(configuration) {
            Some(spec) => Predictor::Cascade {
                model: Box::new(cascade_train(schema, &imputed, &spec, seed)?),
            },
            None => {
                let kind = match configuration {
                    Configuration::Nb => ClassifierKind::Nb,
                    _ => ClassifierKind::Svm,
                };
                let rows: Vec<FeatureVector> = imputed.iter().map(|i| i.features.clone()).collect();
                let labels: Vec<bool> = imputed.iter().map(|i| i.label_30).collect();
                let layer = LayerModel::fit(
                    schema,
                    1,
                    &rows,
                    &labels,
                    kind,
                    &settings.baseline,
                    seed::derive(seed, &[1]),
                )?;
                Predictor::Single { layer }
            }
        };
        Ok(TrainedPipeline {
            configuration,
            imputer,
            predictor,
        })
    }

    pub fn impute(&self, vector: &FeatureVector) -> FeatureVector {
        match &self.imputer {
            Some(imp) => imp.transform(vector),
            None => vector.clone(),
        }
    }

    /// 30-day prediction, with the routing path for cascades.
    pub fn predict_traced(&self, vector: &FeatureVector) -> (Prediction, Option<CascadeOutcome>) {
        let v = self.impute(vector);
        match &self.predictor {
            Predictor::Single { layer } => (layer.predict(&v), None),
            Predictor::Cascade { model } => {
                let out = model.predict(&v);
                (out.prediction, Some(out))
            }
        }
    }

    pub fn predict(&self, vector: &FeatureVector) -> Prediction {
        self.predict_traced(vector).0
    }

    pub fn cascade(&self) -> Option<&CascadeModel> {
        match &self.predictor {
            Predictor::Cascade { model } => Some(model),
            Predictor::Single { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_configuration_lists() {
        assert_eq!(
            Configuration::parse_list("nb, mlc2,nb").unwrap(),
            [Configuration::Nb, Configuration::Mlc2]
        );
        assert!(Configuration::parse_list("mlc3").is_err());
        assert!(Configuration::parse_list("").is_err());
    }

    #[test]
    fn cascade_specs_follow_layer_table() {
        let s = ModelSettings::default();
        let kinds = |c| s.cascade_spec(c).unwrap().layers.map(|l| l.classifier);
        assert_eq!(kinds(Configuration::Mlc1), [ClassifierKind::Nb; 3]);
        assert_eq!(
            kinds(Configuration::Mlc2),
            [ClassifierKind::Nb, ClassifierKind::Nb, ClassifierKind::Svm]
        );
        assert!(s.cascade_spec(Configuration::Nb).is_none());
    }
}
