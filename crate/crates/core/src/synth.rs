//! Synthetic heart-failure cohorts with a controllable predictive signal.
//!
//! Every generated encounter is an index admission (heart failure, discharged
//! home, alive). Encounters are chained per patient: an encounter in a
//! readmitted stratum is followed by the patient's next encounter after the
//! stratum's number of days, and each chain ends with a never-readmitted
//! encounter. Ingesting the output therefore reproduces the configured
//! stratum counts exactly.
//!
//! A fixed set of attributes carries signal. Each one deviates from its
//! background distribution in exactly one stratum: never readmitted,
//! readmitted after 60 days, or readmitted within 31 to 60 days. Encounters
//! readmitted within 30 days always look like the background. For every
//! encounter and signal attribute, the stratum distribution is used with
//! probability `signal_strength`, the background otherwise.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::cohort::{EncounterRecord, LabelCounts, LabeledInstance};
use crate::error::{Error, Result};
use crate::eval::imbalance_ratio;
use crate::features::schema::{FeatureSchema, FeatureVector, Kind, Value, COMORBIDITY_FLAGS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_never: usize,
    pub n_within30: usize,
    pub n_30to60: usize,
    pub n_over60: usize,
    /// When set, the four counts are rescaled to sum to exactly this total.
    pub n_total: Option<usize>,
    pub signal_strength: f64,
    pub missing_ef_rate: f64,
    /// Share of encounters whose blood-pressure category is missing.
    pub missing_bp_rate: f64,
    /// Longest gap, in days, for the over-60 stratum.
    pub max_days: u32,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// 9770 encounters: 5503 never readmitted, 1477 within 30 days, 656 in
    /// 31 to 60 days and 2134 later.
    fn default() -> Self {
        SynthConfig {
            n_never: 5503,
            n_within30: 1477,
            n_30to60: 656,
            n_over60: 2134,
            n_total: None,
            signal_strength: 0.8,
            missing_ef_rate: 0.59,
            missing_bp_rate: 0.0,
            max_days: 365,
            seed: 42,
        }
    }
}

impl SynthConfig {
    /// Same class shape rescaled to exactly `total` encounters.
    pub fn scaled(total: usize) -> Self {
        SynthConfig {
            n_total: Some(total),
            ..SynthConfig::default()
        }
        .resolved()
    }

    /// Applies `n_total`, apportioning by largest remainder with at least
    /// one never-readmitted encounter.
    pub fn resolved(&self) -> Self {
        let Some(total) = self.n_total else {
            return self.clone();
        };
        let counts = [self.n_never, self.n_within30, self.n_30to60, self.n_over60];
        let sum: usize = counts.iter().sum();
        let mut out = [0usize; 4];
        if sum > 0 && total > 0 {
            let exact: Vec<f64> = counts.iter().map(|&n| n as f64 * total as f64 / sum as f64).collect();
            for (o, e) in out.iter_mut().zip(&exact) {
                *o = e.floor() as usize;
            }
            let mut order: Vec<usize> = (0..4).collect();
            order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
            let short = total - out.iter().sum::<usize>();
            for &i in order.iter().take(short) {
                out[i] += 1;
            }
            if out[0] == 0 {
                let donor = (1..4).max_by_key(|&i| out[i]).expect("three strata");
                out[donor] -= 1;
                out[0] = 1;
            }
        }
        SynthConfig {
            n_never: out[0],
            n_within30: out[1],
            n_30to60: out[2],
            n_over60: out[3],
            n_total: None,
            ..self.clone()
        }
    }

    pub fn total(&self) -> usize {
        self.n_never + self.n_within30 + self.n_30to60 + self.n_over60
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: SynthConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("synthetic config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, x: f64| {
            if (0.0..=1.0).contains(&x) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {x}")))
            }
        };
        rate("signal_strength", self.signal_strength)?;
        rate("missing_ef_rate", self.missing_ef_rate)?;
        rate("missing_bp_rate", self.missing_bp_rate)?;
        if self.n_total == Some(0) {
            return Err(Error::Config("n_total must be positive".into()));
        }
        let c = self.resolved();
        if c.total() == 0 {
            return Err(Error::Config("n_never + n_within30 + n_30to60 + n_over60 must be positive".into()));
        }
        if c.n_never == 0 {
            return Err(Error::Config(
                "n_never must be positive: every patient's last encounter is never readmitted".into(),
            ));
        }
        if self.max_days <= 60 {
            return Err(Error::Config(format!("max_days must exceed 60, got {}", self.max_days)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stratum {
    Never = 0,
    Within30 = 1,
    From31To60 = 2,
    Over60 = 3,
}

/// Distribution of one attribute: background plus an optional deviation in
/// one stratum.
#[derive(Debug, Clone, Copy)]
enum Profile {
    Flag { background: f64, deviant: Option<(Stratum, f64)> },
    Normal { mean: f64, sd: f64, min: f64, max: f64, deviant: Option<(Stratum, f64)> },
    /// Geometric weights `decay^i` over the domain; the deviant stratum uses
    /// the reversed order.
    Levels { decay: f64, deviant: Option<Stratum> },
}

/// Signal attributes and the cascade layer whose question they inform.
pub const SIGNAL_FEATURES: [(&str, u8); 14] = [
    ("renal_failure", 1),
    ("copd", 1),
    ("diabetes_dm_complications", 1),
    ("arrhythmias", 1),
    ("secondary_diagnosis_count", 1),
    ("depression", 2),
    ("dementia_senility", 2),
    ("anemia_blood_disease", 2),
    ("age", 2),
    ("pneumonia", 3),
    ("fluid_electrolyte_disorders", 3),
    ("acute_coronary_syndrome", 3),
    ("length_of_stay", 3),
    ("apr_drg_severity", 1),
];

pub fn signal_features(layer: u8) -> Vec<&'static str> {
    SIGNAL_FEATURES
        .iter()
        .filter(|(_, l)| *l == layer)
        .map(|(n, _)| *n)
        .collect()
}

fn profile(name: &str, index: usize) -> Profile {
    use Stratum::*;
    let flag = |background, stratum, rate| Profile::Flag {
        background,
        deviant: Some((stratum, rate)),
    };
    match name {
        "renal_failure" => flag(0.40, Never, 0.17),
        "copd" => flag(0.40, Never, 0.20),
        "diabetes_dm_complications" => flag(0.45, Never, 0.23),
        "arrhythmias" => flag(0.45, Never, 0.25),
        "depression" => flag(0.35, Over60, 0.14),
        "dementia_senility" => flag(0.30, Over60, 0.12),
        "anemia_blood_disease" => flag(0.40, Over60, 0.20),
        "pneumonia" => flag(0.35, From31To60, 0.12),
        "fluid_electrolyte_disorders" => flag(0.40, From31To60, 0.17),
        "acute_coronary_syndrome" => flag(0.35, From31To60, 0.14),
        "secondary_diagnosis_count" => Profile::Normal {
            mean: 18.0,
            sd: 5.0,
            min: 0.0,
            max: 60.0,
            deviant: Some((Never, 14.5)),
        },
        "age" => Profile::Normal {
            mean: 72.0,
            sd: 10.0,
            min: 18.0,
            max: 100.0,
            deviant: Some((Over60, 66.0)),
        },
        "length_of_stay" => Profile::Normal {
            mean: 6.0,
            sd: 2.5,
            min: 1.0,
            max: 45.0,
            deviant: Some((From31To60, 4.0)),
        },
        "ejection_fraction" => Profile::Normal {
            mean: 48.63,
            sd: 12.0,
            min: 10.0,
            max: 80.0,
            deviant: None,
        },
        "apr_drg_severity" => Profile::Levels {
            decay: 1.6,
            deviant: Some(Never),
        },
        "discharge_status" | "is_hf_primary" => Profile::Levels {
            decay: 0.0,
            deviant: None,
        },
        _ if COMORBIDITY_FLAGS.contains(&name) => Profile::Flag {
            background: 0.05 + 0.25 * ((index * 7) % 11) as f64 / 10.0,
            deviant: None,
        },
        _ => Profile::Levels {
            decay: 0.7,
            deviant: None,
        },
    }
}

fn geometric_pick(rng: &mut ChaCha8Rng, levels: usize, decay: f64, reversed: bool) -> u32 {
    let weights: Vec<f64> = (0..levels).map(|i| decay.powi(i as i32)).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut pick = levels - 1;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            pick = i;
            break;
        }
        u -= w;
    }
    if reversed {
        (levels - 1 - pick) as u32
    } else {
        pick as u32
    }
}

fn draw(
    rng: &mut ChaCha8Rng,
    profile: Profile,
    levels: usize,
    stratum: Stratum,
    signal: f64,
) -> Value {
    let use_signal = rng.random_bool(signal);
    match profile {
        Profile::Flag { background, deviant } => {
            let p = match deviant {
                Some((s, rate)) if use_signal && s == stratum => rate,
                _ => background,
            };
            Value::Category(rng.random_bool(p) as u32)
        }
        Profile::Normal { mean, sd, min, max, deviant } => {
            let mu = match deviant {
                Some((s, m)) if use_signal && s == stratum => m,
                _ => mean,
            };
            let x: f64 = Normal::new(mu, sd).expect("valid normal").sample(rng);
            Value::Numeric(x.clamp(min, max).round())
        }
        Profile::Levels { decay, deviant } => {
            let reversed = use_signal && deviant == Some(stratum);
            Value::Category(geometric_pick(rng, levels, decay, reversed))
        }
    }
}

/// Generates the encounter records for `config`, sorted by patient and date.
pub fn generate_cohort(config: &SynthConfig, schema: &FeatureSchema) -> Result<Vec<EncounterRecord>> {
    config.validate()?;
    let config = &config.resolved();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut readmitted: Vec<Stratum> = std::iter::repeat_n(Stratum::Within30, config.n_within30)
        .chain(std::iter::repeat_n(Stratum::From31To60, config.n_30to60))
        .chain(std::iter::repeat_n(Stratum::Over60, config.n_over60))
        .collect();
    readmitted.shuffle(&mut rng);
    let mut chains: Vec<Vec<Stratum>> = vec![Vec::new(); config.n_never];
    for s in readmitted {
        let p = rng.random_range(0..config.n_never);
        chains[p].push(s);
    }

    let profiles: Vec<Profile> = schema
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| profile(&f.name, i))
        .collect();
    let idx = |name: &str| schema.index_of(name);
    let (los_i, ef_i, bp_i, hf_i, status_i) = (
        idx("length_of_stay"),
        idx("ejection_fraction"),
        idx("blood_pressure"),
        idx("is_hf_primary"),
        idx("discharge_status"),
    );
    let patient_level = ["gender", "ethnic_group", "marital_status"].map(idx);
    let origin = NaiveDate::from_ymd_opt(2009, 1, 1).expect("valid date");

    let width = config.n_never.to_string().len().max(5);
    let mut records = Vec::with_capacity(config.total());
    let mut admission = 0usize;
    for (p, chain) in chains.into_iter().enumerate() {
        let patient_id = format!("P{:0width$}", p + 1);
        let mut admit = origin + Duration::days(rng.random_range(0..730));
        let mut fixed: BTreeMap<usize, Value> = BTreeMap::new();
        for stratum in chain.into_iter().chain([Stratum::Never]) {
            admission += 1;
            let mut values = Vec::with_capacity(schema.len());
            for (i, def) in schema.features.iter().enumerate() {
                let mut v = draw(&mut rng, profiles[i], def.levels(), stratum, config.signal_strength);
                if patient_level.contains(&Some(i)) && def.kind == Kind::Categorical {
                    v = *fixed.entry(i).or_insert(v);
                }
                values.push(v);
            }
            if let Some(i) = status_i {
                // every synthetic encounter is a live discharge home
                values[i] = Value::Category(0);
            }
            let is_primary = rng.random_bool(0.6);
            if let Some(i) = hf_i {
                values[i] = Value::Category(if is_primary { 0 } else { 1 });
            }
            if let Some(i) = ef_i {
                if rng.random_bool(config.missing_ef_rate) {
                    values[i] = Value::Missing;
                }
            }
            if let Some(i) = bp_i {
                if rng.random_bool(config.missing_bp_rate) {
                    values[i] = Value::Missing;
                }
            }
            let los = los_i
                .and_then(|i| values[i].as_f64())
                .map_or_else(|| rng.random_range(1..10), |x| x as i64);
            let discharge = admit + Duration::days(los);
            let hf_code = crate::cohort::CHF_CODES[rng.random_range(0..9)];
            let hf_code = if rng.random_bool(0.5) { "428.0" } else { hf_code };
            let diagnosis_codes = if is_primary {
                vec![hf_code.to_string(), "401.9".to_string()]
            } else {
                vec!["486".to_string(), hf_code.to_string()]
            };
            records.push(EncounterRecord {
                patient_id: patient_id.clone(),
                admission_id: format!("A{admission:07}"),
                admit_date: admit,
                discharge_date: discharge,
                diagnosis_codes,
                discharge_status: "home".into(),
                discharged_to_home: true,
                in_hospital_death: false,
                attributes: FeatureVector(values),
            });
            let gap = match stratum {
                Stratum::Within30 => rng.random_range(0..=30),
                Stratum::From31To60 => rng.random_range(31..=60),
                Stratum::Over60 => rng.random_range(61..=config.max_days as i64),
                Stratum::Never => 0,
            };
            admit = discharge + Duration::days(gap);
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub counts: LabelCounts,
    /// Non-positive over positive count for the 30-day task.
    pub imbalance_ratio_30: Option<f64>,
    /// Share of missing values per attribute.
    pub missingness: BTreeMap<String, f64>,
}

pub fn summarize_cohort(instances: &[LabeledInstance], schema: &FeatureSchema) -> CohortSummary {
    let counts = LabelCounts::of(instances);
    let positives = counts.within_30;
    let negatives = counts.total() - positives;
    let n = instances.len();
    let missingness = if n == 0 {
        BTreeMap::new()
    } else {
        schema
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let missing = instances.iter().filter(|x| x.features.get(i).is_missing()).count();
                (f.name.clone(), missing as f64 / n as f64)
            })
            .collect()
    };
    CohortSummary {
        counts,
        imbalance_ratio_30: imbalance_ratio(negatives, positives).ok(),
        missingness,
    }
}
