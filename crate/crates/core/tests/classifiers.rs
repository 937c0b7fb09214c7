mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use readmit::classifiers::{NbModel, SvmModel, SvmParams};
use readmit::features::{FeatureDef, FeatureSchema, FeatureVector, Value};

/// Random mixed schema and dataset; both classes present, numeric columns
/// complete in each class, categorical columns with some missing values.
fn dataset(seed: u64, n: usize, d: usize) -> (FeatureSchema, Vec<FeatureVector>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let defs: Vec<FeatureDef> = (0..d)
        .map(|j| {
            if j % 3 == 2 {
                FeatureDef::numeric(&format!("n{j}"))
            } else {
                let k = 2 + j % 4;
                let levels: Vec<String> = (0..k).map(|l| l.to_string()).collect();
                FeatureDef::categorical(&format!("c{j}"), &levels)
            }
        })
        .collect();
    let schema = FeatureSchema::new(defs).unwrap();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    let rows = labels
        .iter()
        .map(|&y| {
            FeatureVector(
                schema
                    .features
                    .iter()
                    .map(|f| {
                        if f.is_numeric() {
                            Value::Numeric(rng.random_range(-3.0..3.0) + if y { 1.0 } else { 0.0 })
                        } else if rng.random_bool(0.05) {
                            Value::Missing
                        } else {
                            Value::Category(rng.random_range(0..f.levels() as u32))
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    (schema, rows, labels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nb_matches_brute_force(seed in any::<u64>(), n in 4usize..=100, d in 1usize..=10) {
        let (schema, rows, labels) = dataset(seed, n, d);
        let features: Vec<usize> = (0..d).collect();
        let model = NbModel::train(&schema, &rows, &labels, &features, 1.0).unwrap();
        let (_, queries, _) = dataset(seed ^ 0x5a5a, 10, d);
        for q in rows.iter().chain(&queries) {
            let expected = common::brute_force_posterior(&schema, &rows, &labels, &features, 1.0, q);
            let got = model.predict(q).score;
            prop_assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
        }
    }

    #[test]
    fn nb_posteriors_sum_to_one(seed in any::<u64>(), n in 4usize..=60, d in 1usize..=8) {
        let (schema, rows, labels) = dataset(seed, n, d);
        let features: Vec<usize> = (0..d).collect();
        let model = NbModel::train(&schema, &rows, &labels, &features, 1.0).unwrap();
        for q in &rows {
            let [neg, pos] = model.log_joint(q);
            let total = neg.exp() + pos.exp();
            let p = pos.exp() / total;
            prop_assert!((p + neg.exp() / total - 1.0).abs() < 1e-9);
            prop_assert!((model.posterior(q) - p).abs() < 1e-9);
        }
    }

    #[test]
    fn unsmoothed_nb_ignores_duplicating_the_training_set(seed in any::<u64>(), n in 4usize..=60) {
        let (schema, rows, labels) = dataset(seed, n, 6);
        let features: Vec<usize> = (0..6).collect();
        let once = NbModel::train(&schema, &rows, &labels, &features, 0.0).unwrap();
        let rows2: Vec<FeatureVector> = rows.iter().chain(&rows).cloned().collect();
        let labels2: Vec<bool> = labels.iter().chain(&labels).copied().collect();
        let twice = NbModel::train(&schema, &rows2, &labels2, &features, 0.0).unwrap();
        for q in &rows {
            prop_assert!((once.posterior(q) - twice.posterior(q)).abs() < 1e-9);
        }
    }
}

fn blobs(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2 == 0;
        let c = if y { 2.5 } else { -2.5 };
        xs.push(vec![c + rng.random_range(-1.5..1.5), c + rng.random_range(-1.5..1.5)]);
        ys.push(y);
    }
    (xs, ys)
}

#[test]
fn svm_separates_blobs_and_converges() {
    for seed in 0..5 {
        let (xs, ys) = blobs(seed, 200);
        let (model, trace) = SvmModel::train_traced(&xs, &ys, SvmParams::default(), seed).unwrap();
        let correct = xs.iter().zip(&ys).filter(|(x, &y)| model.predict(x).unwrap().label == y).count();
        assert_eq!(correct, 200, "seed {seed}");
        let best = trace.iter().copied().fold(f64::INFINITY, f64::min);
        let last = model.objective(&xs, &ys);
        assert!(last <= 1.05 * best, "seed {seed}: {last} vs best {best}");
        assert!(last <= trace[0] + 1e-12);
    }
}

#[test]
fn svm_objective_matches_definition() {
    let (xs, ys) = blobs(9, 50);
    let model = SvmModel::train(&xs, &ys, SvmParams::default(), 1).unwrap();
    let lambda = model.lambda;
    let norm2: f64 = model.weights.iter().map(|w| w * w).sum();
    let hinge: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, &y)| {
            let m: f64 = x.iter().zip(&model.weights).map(|(a, b)| a * b).sum::<f64>() + model.bias;
            let s = if y { 1.0 } else { -1.0 };
            (1.0 - s * m).max(0.0)
        })
        .sum::<f64>()
        / xs.len() as f64;
    assert!((model.objective(&xs, &ys) - (lambda / 2.0 * norm2 + hinge)).abs() < 1e-12);
}

#[test]
fn svm_seed_changes_the_path_not_the_answer() {
    let (xs, ys) = blobs(3, 200);
    let a = SvmModel::train(&xs, &ys, SvmParams::default(), 1).unwrap();
    let b = SvmModel::train(&xs, &ys, SvmParams::default(), 1).unwrap();
    let c = SvmModel::train(&xs, &ys, SvmParams::default(), 2).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.weights, c.weights);
    for x in &xs {
        assert_eq!(a.predict(x).unwrap().label, c.predict(x).unwrap().label);
    }
}
