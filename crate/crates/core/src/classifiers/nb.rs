//! Naive Bayes over mixed attributes: Laplace-smoothed tables for
//! categorical features and one Gaussian per class for numeric ones.

use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::error::{Error, Result};
use crate::features::{FeatureSchema, FeatureVector, Value};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Conditional {
    /// `probs[class][level]`; `unseen[class]` is what a level outside the
    /// declared domain gets, i.e. the smoothed probability of a zero count.
    Categorical {
        feature: usize,
        probs: [Vec<f64>; 2],
        unseen: [f64; 2],
    },
    Gaussian {
        feature: usize,
        mean: [f64; 2],
        var: [f64; 2],
    },
}

impl Conditional {
    pub fn feature(&self) -> usize {
        match self {
            Conditional::Categorical { feature, .. } | Conditional::Gaussian { feature, .. } => {
                *feature
            }
        }
    }

    /// Log-likelihood of `value` under `class`; `None` for a missing value.
    fn log_likelihood(&self, value: Value, class: usize) -> Option<f64> {
        match (self, value) {
            (_, Value::Missing) => None,
            (Conditional::Categorical { probs, unseen, .. }, v) => {
                let level = match v {
                    Value::Category(c) => c as usize,
                    Value::Numeric(x) => x as usize,
                    Value::Missing => unreachable!(),
                };
                let p = probs[class].get(level).copied().unwrap_or(unseen[class]);
                Some(p.ln())
            }
            (Conditional::Gaussian { mean, var, .. }, v) => {
                let x = v.as_f64()?;
                let d = x - mean[class];
                Some(-0.5 * (2.0 * std::f64::consts::PI * var[class]).ln() - d * d / (2.0 * var[class]))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    /// (negative, positive)
    pub priors: [f64; 2],
    pub conditionals: Vec<Conditional>,
    pub alpha: f64,
    pub variance_floor: f64,
}

impl NbModel {
    /// Fits on the listed schema features. Missing values are skipped when
    /// counting.
    pub fn train(
        schema: &FeatureSchema,
        rows: &[FeatureVector],
        labels: &[bool],
        features: &[usize],
        alpha: f64,
    ) -> Result<Self> {
        assert_eq!(rows.len(), labels.len(), "rows and labels differ in length");
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("smoothing must be finite and >= 0, got {alpha}")));
        }
        let n_pos = labels.iter().filter(|&&y| y).count();
        let n_neg = labels.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(Error::Degenerate(format!(
                "naive Bayes needs both classes, got {n_neg} negative and {n_pos} positive"
            )));
        }
        let n = labels.len() as f64;
        let priors = [n_neg as f64 / n, n_pos as f64 / n];

        let conditionals = features
            .iter()
            .map(|&f| {
                let def = &schema.features[f];
                if def.is_numeric() {
                    let mut sum = [0.0; 2];
                    let mut count = [0.0; 2];
                    for (r, &y) in rows.iter().zip(labels) {
                        if let Some(x) = r.get(f).as_f64() {
                            sum[y as usize] += x;
                            count[y as usize] += 1.0;
                        }
                    }
                    let mean = [0, 1].map(|c| if count[c] > 0.0 { sum[c] / count[c] } else { 0.0 });
                    let mut ss = [0.0; 2];
                    for (r, &y) in rows.iter().zip(labels) {
                        if let Some(x) = r.get(f).as_f64() {
                            let d = x - mean[y as usize];
                            ss[y as usize] += d * d;
                        }
                    }
                    let var = [0, 1].map(|c| {
                        let v = if count[c] > 0.0 { ss[c] / count[c] } else { 0.0 };
                        v.max(VARIANCE_FLOOR)
                    });
                    Conditional::Gaussian { feature: f, mean, var }
                } else {
                    let k = def.levels();
                    let mut counts = [vec![0.0; k], vec![0.0; k]];
                    let mut totals = [0.0; 2];
                    for (r, &y) in rows.iter().zip(labels) {
                        if let Value::Category(c) = r.get(f) {
                            if let Some(cell) = counts[y as usize].get_mut(c as usize) {
                                *cell += 1.0;
                                totals[y as usize] += 1.0;
                            }
                        }
                    }
                    let denom = totals.map(|t| t + alpha * k as f64);
                    let probs = [0, 1].map(|c| {
                        counts[c]
                            .iter()
                            .map(|&n| if denom[c] > 0.0 { (n + alpha) / denom[c] } else { 1.0 / k as f64 })
                            .collect::<Vec<f64>>()
                    });
                    let unseen = [0, 1].map(|c| if denom[c] > 0.0 { alpha / denom[c] } else { 0.0 });
                    Conditional::Categorical { feature: f, probs, unseen }
                }
            })
            .collect();

        Ok(NbModel {
            priors,
            conditionals,
            alpha,
            variance_floor: VARIANCE_FLOOR,
        })
    }

    /// Unnormalized log posterior of each class.
    pub fn log_joint(&self, vector: &FeatureVector) -> [f64; 2] {
        [0, 1].map(|c| {
            self.priors[c].ln()
                + self
                    .conditionals
                    .iter()
                    .filter_map(|cond| cond.log_likelihood(vector.get(cond.feature()), c))
                    .sum::<f64>()
        })
    }

    /// Positive-class posterior, normalized in log space.
    pub fn posterior(&self, vector: &FeatureVector) -> f64 {
        let [neg, pos] = self.log_joint(vector);
        let top = neg.max(pos);
        if top == f64::NEG_INFINITY {
            // every class ruled out: fall back to the priors
            return self.priors[1];
        }
        let (en, ep) = ((neg - top).exp(), (pos - top).exp());
        ep / (en + ep)
    }

    /// Exact ties at 0.5 predict negative.
    pub fn predict(&self, vector: &FeatureVector) -> Prediction {
        let score = self.posterior(vector);
        Prediction {
            label: score > 0.5,
            score,
        }
    }
}
