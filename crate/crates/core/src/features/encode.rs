//! Dense numeric encoding for the linear SVM: standardized numerics and
//! one-hot categoricals with a trailing OTHER slot per feature.

use serde::{Deserialize, Serialize};

use super::schema::{FeatureSchema, FeatureVector, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EncodedColumn {
    Numeric { feature: usize, mean: f64, scale: f64 },
    /// Categories seen in training, in index order; anything else lands in
    /// the OTHER slot after them.
    OneHot { feature: usize, categories: Vec<u32> },
}

impl EncodedColumn {
    fn width(&self) -> usize {
        match self {
            EncodedColumn::Numeric { .. } => 1,
            EncodedColumn::OneHot { categories, .. } => categories.len() + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmEncoder {
    pub columns: Vec<EncodedColumn>,
    dim: usize,
}

impl SvmEncoder {
    /// Fits standardization and one-hot layouts on training rows, for the
    /// given schema features only.
    pub fn fit(schema: &FeatureSchema, rows: &[FeatureVector], features: &[usize]) -> Self {
        let columns: Vec<EncodedColumn> = features
            .iter()
            .map(|&f| {
                if schema.features[f].is_numeric() {
                    let xs: Vec<f64> = rows.iter().filter_map(|r| r.get(f).as_f64()).collect();
                    let n = xs.len().max(1) as f64;
                    let mean = xs.iter().sum::<f64>() / n;
                    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                    let sd = var.sqrt();
                    EncodedColumn::Numeric {
                        feature: f,
                        mean,
                        scale: if sd > 0.0 { sd } else { 1.0 },
                    }
                } else {
                    let mut categories: Vec<u32> = rows
                        .iter()
                        .filter_map(|r| match r.get(f) {
                            Value::Category(c) => Some(c),
                            _ => None,
                        })
                        .collect();
                    categories.sort_unstable();
                    categories.dedup();
                    EncodedColumn::OneHot {
                        feature: f,
                        categories,
                    }
                }
            })
            .collect();
        let dim = columns.iter().map(EncodedColumn::width).sum();
        SvmEncoder { columns, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Missing numerics encode as the training mean (0 after centering);
    /// missing or unseen categories go to OTHER.
    pub fn encode(&self, vector: &FeatureVector) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut at = 0;
        for col in &self.columns {
            match col {
                EncodedColumn::Numeric {
                    feature,
                    mean,
                    scale,
                } => {
                    if let Some(x) = vector.get(*feature).as_f64() {
                        out[at] = (x - mean) / scale;
                    }
                }
                EncodedColumn::OneHot {
                    feature,
                    categories,
                } => {
                    let slot = match vector.get(*feature) {
                        Value::Category(c) => categories.binary_search(&c).unwrap_or(categories.len()),
                        _ => categories.len(),
                    };
                    out[at + slot] = 1.0;
                }
            }
            at += col.width();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::schema::FeatureDef;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            FeatureDef::numeric("age"),
            FeatureDef::categorical("gender", &["M", "F"]),
            FeatureDef::categorical("marital_status", &["married", "single", "widowed"]),
        ])
        .unwrap()
    }

    fn row(age: f64, g: u32, m: u32) -> FeatureVector {
        FeatureVector(vec![Value::Numeric(age), Value::Category(g), Value::Category(m)])
    }

    #[test]
    fn one_hot_and_centering() {
        let train = vec![row(59.0, 0, 0), row(79.0, 1, 1)];
        let enc = SvmEncoder::fit(&schema(), &train, &[0, 1, 2]);
        // age + (M, F, OTHER) + (married, single, OTHER)
        assert_eq!(enc.dim(), 7);
        let x = enc.encode(&row(69.0, 1, 0));
        assert_eq!(x, vec![0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn unseen_category_goes_to_other() {
        let train = vec![row(59.0, 0, 0), row(79.0, 1, 1)];
        let enc = SvmEncoder::fit(&schema(), &train, &[2]);
        assert_eq!(enc.encode(&row(1.0, 0, 2)), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn standardized_training_columns() {
        let train: Vec<_> = (0..37).map(|i| row(40.0 + (i * i % 17) as f64, 0, 0)).collect();
        let enc = SvmEncoder::fit(&schema(), &train, &[0]);
        let xs: Vec<f64> = train.iter().map(|r| enc.encode(r)[0]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((sd - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_variance_column_is_only_centered() {
        let train = vec![row(50.0, 0, 0); 5];
        let enc = SvmEncoder::fit(&schema(), &train, &[0]);
        assert_eq!(enc.encode(&row(52.0, 0, 0)), vec![2.0]);
    }
}
