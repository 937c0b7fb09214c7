//! Linear SVM trained by stochastic subgradient descent on the primal.
//!
//! Objective: `lambda/2 * |w|^2 + mean(max(0, 1 - y (w.x + b)))`, step size
//! `1 / (lambda * t)`, one seeded pass over a fresh permutation per epoch.
//! The returned weights are the average of the iterates over the second half
//! of all updates.
//!
//! The bias is unregularized, so the strongly convex step size does not apply
//! to it: it moves by `BIAS_STEP / sqrt(t)` during training, and is then set
//! to the exact minimizer of the hinge loss for the averaged weights.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 0.01,
            epochs: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

const BIAS_STEP: f64 = 0.1;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

/// Regularized hinge objective of `(weights, bias)` on a dataset.
pub fn objective(weights: &[f64], bias: f64, lambda: f64, xs: &[Vec<f64>], labels: &[bool]) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(labels)
        .map(|(x, &y)| (1.0 - sign(y) * (dot(weights, x) + bias)).max(0.0))
        .sum();
    0.5 * lambda * dot(weights, weights) + hinge / xs.len().max(1) as f64
}

fn validate(xs: &[Vec<f64>], labels: &[bool], params: &SvmParams) -> Result<usize> {
    assert_eq!(xs.len(), labels.len(), "rows and labels differ in length");
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be positive, got {}", params.lambda)));
    }
    if params.epochs == 0 {
        return Err(Error::Config("epochs must be positive".into()));
    }
    let dim = xs
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::Degenerate("no training rows".into()))?;
    for (row, x) in xs.iter().enumerate() {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        if let Some(column) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, column });
        }
    }
    Ok(dim)
}

/// Bias minimizing the mean hinge loss for fixed `weights`, or `None` when
/// only one class is present. A flat minimum resolves to its midpoint.
fn optimal_bias(weights: &[f64], xs: &[Vec<f64>], labels: &[bool]) -> Option<f64> {
    // a positive is in violation for b < 1 - w.x, a negative for b > -1 - w.x
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (x, &y) in xs.iter().zip(labels) {
        let s = dot(weights, x);
        if y {
            pos.push(1.0 - s);
        } else {
            neg.push(-1.0 - s);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let mut points: Vec<f64> = pos.iter().chain(&neg).copied().collect();
    points.sort_by(f64::total_cmp);
    // right derivative of the loss; non-decreasing, grows at every breakpoint
    let slope = |b: f64| {
        let violated_neg = neg.partition_point(|&q| q <= b);
        let violated_pos = pos.len() - pos.partition_point(|&p| p <= b);
        violated_neg as i64 - violated_pos as i64
    };
    let at = points.partition_point(|&b| slope(b) < 0);
    let lo = points[at];
    if slope(lo) > 0 {
        return Some(lo);
    }
    let hi = points[at..].iter().copied().find(|&b| b > lo).unwrap_or(lo);
    Some(0.5 * (lo + hi))
}

impl SvmModel {
    pub fn train(xs: &[Vec<f64>], labels: &[bool], params: SvmParams, seed: u64) -> Result<Self> {
        Self::fit(xs, labels, params, seed, None)
    }

    /// Like [`SvmModel::train`], also returning the objective of the current
    /// iterate after each epoch.
    pub fn train_traced(
        xs: &[Vec<f64>],
        labels: &[bool],
        params: SvmParams,
        seed: u64,
    ) -> Result<(Self, Vec<f64>)> {
        let mut trace = Vec::with_capacity(params.epochs);
        let model = Self::fit(xs, labels, params, seed, Some(&mut trace))?;
        Ok((model, trace))
    }

    fn fit(
        xs: &[Vec<f64>],
        labels: &[bool],
        params: SvmParams,
        seed: u64,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<Self> {
        let dim = validate(xs, labels, &params)?;
        let lambda = params.lambda;
        let radius = 1.0 / lambda.sqrt();
        let total = params.epochs * xs.len();
        let average_from = total / 2;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut w = vec![0.0; dim];
        let mut b = 0.0;
        let mut w_sum = vec![0.0; dim];
        let mut b_sum = 0.0;
        let mut averaged = 0usize;
        let mut t = 0usize;

        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let y = sign(labels[i]);
                let x = &xs[i];
                let margin = y * (dot(&w, x) + b);
                let shrink = 1.0 - eta * lambda;
                w.iter_mut().for_each(|wj| *wj *= shrink);
                if margin < 1.0 {
                    for (wj, xj) in w.iter_mut().zip(x) {
                        *wj += eta * y * xj;
                    }
                    b += BIAS_STEP / (t as f64).sqrt() * y;
                }
                let norm = dot(&w, &w).sqrt();
                if norm > radius {
                    let s = radius / norm;
                    w.iter_mut().for_each(|wj| *wj *= s);
                }
                if t > average_from {
                    for (s, wj) in w_sum.iter_mut().zip(&w) {
                        *s += wj;
                    }
                    b_sum += b;
                    averaged += 1;
                }
            }
            if let Some(trace) = trace.as_deref_mut() {
                trace.push(objective(&w, b, lambda, xs, labels));
            }
        }

        let n = averaged as f64;
        let weights: Vec<f64> = w_sum.into_iter().map(|s| s / n).collect();
        let bias = optimal_bias(&weights, xs, labels).unwrap_or(b_sum / n);
        Ok(SvmModel {
            weights,
            bias,
            lambda,
            epochs: params.epochs,
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn objective(&self, xs: &[Vec<f64>], labels: &[bool]) -> f64 {
        objective(&self.weights, self.bias, self.lambda, xs, labels)
    }

    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }

    /// Margin of exactly zero predicts positive.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let score = self.margin(x)?;
        Ok(Prediction {
            label: score >= 0.0,
            score,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(weights: Vec<f64>, bias: f64) -> SvmModel {
        SvmModel {
            weights,
            bias,
            lambda: 0.01,
            epochs: 1,
            seed: 0,
        }
    }

    #[test]
    fn two_point_separable() {
        let xs = vec![vec![1.0], vec![-1.0]];
        let labels = [true, false];
        let m = SvmModel::train(&xs, &labels, SvmParams::default(), 3).unwrap();
        assert!(m.predict(&xs[0]).unwrap().label);
        assert!(!m.predict(&xs[1]).unwrap().label);
    }

    #[test]
    fn identical_rows_fall_back_to_majority() {
        let xs = vec![vec![0.5, -1.0]; 10];
        let labels: Vec<bool> = (0..10).map(|i| i < 7).collect();
        let m = SvmModel::train(&xs, &labels, SvmParams::default(), 1).unwrap();
        assert!(m.predict(&xs[0]).unwrap().label);
        let flipped: Vec<bool> = labels.iter().map(|y| !y).collect();
        let m = SvmModel::train(&xs, &flipped, SvmParams::default(), 1).unwrap();
        assert!(!m.predict(&xs[0]).unwrap().label);
    }

    #[test]
    fn prediction_conventions() {
        let m = fixed(vec![1.0, 0.0], 0.0);
        let p = m.predict(&[2.0, 5.0]).unwrap();
        assert_eq!(p.score, 2.0);
        assert!(p.label);
        // orthogonal to w: zero margin is positive
        let p = m.predict(&[0.0, 3.0]).unwrap();
        assert_eq!(p.score, 0.0);
        assert!(p.label);
        let neg = fixed(vec![-1.0, 0.0], 0.0);
        for x in [[2.0, 1.0], [-3.0, 0.5], [0.5, -2.0]] {
            assert_ne!(m.predict(&x).unwrap().label, neg.predict(&x).unwrap().label);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = fixed(vec![1.0, 0.0], 0.0);
        assert!(matches!(
            m.predict(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let xs = vec![vec![1.0, f64::NAN], vec![0.0, 0.0]];
        assert!(matches!(
            SvmModel::train(&xs, &[true, false], SvmParams::default(), 0),
            Err(Error::NonFinite { row: 0, column: 1 })
        ));
    }

    #[test]
    fn optimal_bias_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = 3 + rand::Rng::random_range(&mut rng, 0..30);
            let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rand::Rng::random_range(&mut rng, -3.0..3.0)]).collect();
            let mut labels: Vec<bool> = (0..n).map(|_| rand::Rng::random_bool(&mut rng, 0.5)).collect();
            labels[0] = true;
            labels[1] = false;
            let w = [rand::Rng::random_range(&mut rng, -2.0..2.0)];
            let b = optimal_bias(&w, &xs, &labels).unwrap();
            let best = objective(&w, b, 1.0, &xs, &labels);
            for k in -4000..=4000 {
                let c = k as f64 / 500.0;
                assert!(objective(&w, c, 1.0, &xs, &labels) >= best - 1e-12, "b {b} beaten by {c}");
            }
        }
        // separable: the midpoint of the zero-loss interval
        let xs = vec![vec![2.0], vec![-2.0]];
        assert_eq!(optimal_bias(&[1.0], &xs, &[true, false]), Some(0.0));
    }

    #[test]
    fn same_seed_same_bits() {
        let xs: Vec<Vec<f64>> = (0..50).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos()]).collect();
        let labels: Vec<bool> = xs.iter().map(|x| x[0] + 0.3 * x[1] > 0.1).collect();
        let a = SvmModel::train(&xs, &labels, SvmParams::default(), 11).unwrap();
        let b = SvmModel::train(&xs, &labels, SvmParams::default(), 11).unwrap();
        let bits = |m: &SvmModel| m.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }
}
