use serde::{Deserialize, Serialize};

use super::chi2::{chi_square_score, discretize, DEFAULT_BINS};
use super::schema::{FeatureSchema, FeatureVector, Value};

pub const DEFAULT_K: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredFeature {
    pub name: String,
    /// Position in the schema.
    pub index: usize,
    pub score: f64,
}

/// Features retained for one layer, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub layer: u8,
    pub retained: Vec<ScoredFeature>,
}

impl FeatureSelection {
    pub fn indices(&self) -> Vec<usize> {
        self.retained.iter().map(|f| f.index).collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.retained.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.retained.iter().any(|f| f.name == name)
    }
}

/// Chi-square score of every schema feature, in schema order.
pub fn score_features(
    schema: &FeatureSchema,
    rows: &[FeatureVector],
    labels: &[bool],
) -> Vec<f64> {
    assert_eq!(rows.len(), labels.len(), "rows and labels differ in length");
    let mut column: Vec<Value> = Vec::with_capacity(rows.len());
    schema
        .features
        .iter()
        .enumerate()
        .map(|(i, def)| {
            column.clear();
            column.extend(rows.iter().map(|r| r.get(i)));
            let levels = discretize(def, &column, DEFAULT_BINS);
            chi_square_score(&levels, labels)
        })
        .collect()
}

/// Keeps the `k` highest-scoring features. Equal scores keep schema order.
pub fn select_features(
    schema: &FeatureSchema,
    rows: &[FeatureVector],
    labels: &[bool],
    k: usize,
    layer: u8,
) -> FeatureSelection {
    if k > schema.len() {
        log::warn!(
            "layer {layer}: k = {k} exceeds the {} available features, keeping all",
            schema.len()
        );
    }
    let scores = score_features(schema, rows, labels);
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable: ties stay in schema order
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let retained = order
        .into_iter()
        .take(k.min(schema.len()))
        .map(|i| ScoredFeature {
            name: schema.features[i].name.clone(),
            index: i,
            score: scores[i],
        })
        .collect();
    FeatureSelection { layer, retained }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::schema::FeatureDef;

    fn toy() -> (FeatureSchema, Vec<FeatureVector>, Vec<bool>) {
        let schema = FeatureSchema::new(vec![
            FeatureDef::categorical("noise", &["0", "1"]),
            FeatureDef::categorical("signal", &["0", "1"]),
            FeatureDef::numeric("weak"),
        ])
        .unwrap();
        let labels: Vec<bool> = (0..60).map(|i| i % 3 == 0).collect();
        let rows = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                FeatureVector(vec![
                    Value::Category((i % 2) as u32),
                    Value::Category(y as u32),
                    Value::Numeric(if y { (i % 7) as f64 + 1.0 } else { (i % 5) as f64 }),
                ])
            })
            .collect();
        (schema, rows, labels)
    }

    #[test]
    fn perfectly_predictive_feature_wins_with_k_one() {
        let (schema, rows, labels) = toy();
        let sel = select_features(&schema, &rows, &labels, 1, 1);
        assert_eq!(sel.names(), ["signal"]);
        assert!((sel.retained[0].score - 60.0).abs() < 1e-9);
    }

    #[test]
    fn k_equal_to_feature_count_keeps_everything() {
        let (schema, rows, labels) = toy();
        let sel = select_features(&schema, &rows, &labels, 3, 1);
        let mut idx = sel.indices();
        idx.sort();
        assert_eq!(idx, [0, 1, 2]);
        assert!(sel.retained.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn oversized_k_keeps_all() {
        let (schema, rows, labels) = toy();
        let sel = select_features(&schema, &rows, &labels, 99, 2);
        assert_eq!(sel.retained.len(), 3);
    }

    #[test]
    fn ties_follow_schema_order() {
        let schema = FeatureSchema::new(vec![
            FeatureDef::categorical("a", &["0"]),
            FeatureDef::categorical("b", &["0"]),
            FeatureDef::categorical("c", &["0"]),
        ])
        .unwrap();
        let rows = vec![FeatureVector(vec![Value::Category(0); 3]); 4];
        let labels = [true, false, true, false];
        let sel = select_features(&schema, &rows, &labels, 2, 1);
        assert_eq!(sel.names(), ["a", "b"]);
    }

    #[test]
    fn different_label_columns_pick_different_features() {
        let (schema, rows, labels) = toy();
        let other: Vec<bool> = (0..60).map(|i| i % 2 == 1).collect();
        let a = select_features(&schema, &rows, &labels, 1, 1);
        let b = select_features(&schema, &rows, &other, 1, 2);
        assert_eq!(a.names(), ["signal"]);
        assert_eq!(b.names(), ["noise"]);
    }
}
