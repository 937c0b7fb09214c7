//! Missing-value handling: ejection-fraction imputation and null-row removal.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::schema::{FeatureSchema, FeatureVector, Value};
use crate::cohort::LabeledInstance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    #[default]
    Mean,
    Median,
}

/// Fill value for one numeric feature, fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub feature: usize,
    pub statistic: Statistic,
    pub fill: f64,
}

impl Imputer {
    pub fn fit(train: &[FeatureVector], feature: usize, statistic: Statistic) -> Result<Self> {
        let mut observed: Vec<f64> = train
            .iter()
            .filter_map(|v| match v.get(feature) {
                Value::Numeric(x) => Some(x),
                _ => None,
            })
            .collect();
        if observed.is_empty() {
            return Err(Error::Data(format!(
                "cannot impute feature {feature}: every training value is missing"
            )));
        }
        let fill = match statistic {
            Statistic::Mean => observed.iter().sum::<f64>() / observed.len() as f64,
            Statistic::Median => {
                observed.sort_by(f64::total_cmp);
                let n = observed.len();
                if n % 2 == 1 {
                    observed[n / 2]
                } else {
                    0.5 * (observed[n / 2 - 1] + observed[n / 2])
                }
            }
        };
        Ok(Imputer {
            feature,
            statistic,
            fill,
        })
    }

    pub fn apply(&self, vector: &mut FeatureVector) {
        if vector.0[self.feature].is_missing() {
            vector.0[self.feature] = Value::Numeric(self.fill);
        }
    }

    pub fn transform(&self, vector: &FeatureVector) -> FeatureVector {
        let mut out = vector.clone();
        self.apply(&mut out);
        out
    }
}

/// Replaces missing ejection-fraction values in `apply_to` with the mean of
/// the values observed in `train`. Other features are left alone.
pub fn impute_ejection_fraction(
    schema: &FeatureSchema,
    train: &[FeatureVector],
    apply_to: &[FeatureVector],
) -> Result<Vec<FeatureVector>> {
    let feature = schema
        .index_of(super::schema::EJECTION_FRACTION)
        .ok_or_else(|| Error::Config("schema has no ejection_fraction feature".into()))?;
    let imputer = Imputer::fit(train, feature, Statistic::Mean)?;
    Ok(apply_to.iter().map(|v| imputer.transform(v)).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NullDropReport {
    pub kept: usize,
    pub dropped: usize,
    /// Missing-value count per feature among the dropped rows.
    pub missing_by_feature: BTreeMap<String, usize>,
}

/// Removes every instance that still has a missing value in a feature not
/// listed in `exempt`.
pub fn drop_null_rows(
    instances: Vec<LabeledInstance>,
    schema: &FeatureSchema,
    exempt: &[usize],
) -> (Vec<LabeledInstance>, NullDropReport) {
    let mut report = NullDropReport::default();
    let mut kept = Vec::with_capacity(instances.len());
    for inst in instances {
        let missing: Vec<usize> = inst
            .features
            .0
            .iter()
            .enumerate()
            .filter(|(i, v)| v.is_missing() && !exempt.contains(i))
            .map(|(i, _)| i)
            .collect();
        if missing.is_empty() {
            kept.push(inst);
        } else {
            report.dropped += 1;
            for i in missing {
                *report
                    .missing_by_feature
                    .entry(schema.features[i].name.clone())
                    .or_default() += 1;
            }
        }
    }
    report.kept = kept.len();
    (kept, report)
}
