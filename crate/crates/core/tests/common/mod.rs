#![allow(dead_code)]

use readmit::cohort::{build_cohort, CohortConfig, LabeledInstance};
use readmit::features::{FeatureSchema, FeatureVector, Kind, Value};
use readmit::synth::{generate_cohort, SynthConfig};

/// Labeled instances of a synthetic cohort, straight from the generator.
pub fn cohort(config: &SynthConfig) -> (FeatureSchema, Vec<LabeledInstance>) {
    let schema = FeatureSchema::heart_failure();
    let records = generate_cohort(config, &schema).expect("valid config");
    let n = records.len();
    let cohort = build_cohort(records, vec![], n, &CohortConfig::default());
    assert!(cohort.report.quarantine_log.is_empty());
    (schema, cohort.instances)
}

pub fn default_cohort(seed: u64) -> (FeatureSchema, Vec<LabeledInstance>) {
    cohort(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
}

/// Positive posterior computed directly as normalised prior times the
/// product of per-feature likelihoods, without logs.
pub fn brute_force_posterior(
    schema: &FeatureSchema,
    rows: &[FeatureVector],
    labels: &[bool],
    features: &[usize],
    alpha: f64,
    query: &FeatureVector,
) -> f64 {
    let n = rows.len() as f64;
    let mut joint = [0.0f64; 2];
    for (c, class) in [false, true].into_iter().enumerate() {
        let members: Vec<&FeatureVector> = rows
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == class)
            .map(|(r, _)| r)
            .collect();
        let nc = members.len() as f64;
        let mut p = nc / n;
        for &f in features {
            let q = query.0[f];
            if q.is_missing() {
                continue;
            }
            let def = &schema.features[f];
            match def.kind {
                Kind::Categorical => {
                    let Value::Category(level) = q else { unreachable!() };
                    let k = def.domain.len() as f64;
                    let observed: Vec<u32> = members
                        .iter()
                        .filter_map(|r| match r.0[f] {
                            Value::Category(v) => Some(v),
                            _ => None,
                        })
                        .collect();
                    let count = observed.iter().filter(|&&v| v == level).count() as f64;
                    p *= (count + alpha) / (observed.len() as f64 + alpha * k);
                }
                Kind::Numeric => {
                    let xs: Vec<f64> = members.iter().filter_map(|r| r.0[f].as_f64()).collect();
                    let m = xs.iter().sum::<f64>() / xs.len() as f64;
                    let var = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).max(1e-9);
                    let x = q.as_f64().unwrap();
                    p *= (-(x - m).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
                }
            }
        }
        joint[c] = p;
    }
    joint[1] / (joint[0] + joint[1])
}
