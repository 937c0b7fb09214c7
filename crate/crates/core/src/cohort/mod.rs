//! Cohort construction: from raw hospital encounters to labeled index
//! admissions.
//!
//! An index admission is a heart-failure encounter (primary or secondary
//! diagnosis) that ended with a live discharge to home. Its label is the
//! number of days from its discharge to the patient's next admission for any
//! cause, bucketed at 30 and 60 days.

pub mod icd;
pub mod io;

use std::collections::{BTreeMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
pub use icd::{chf_code_table, IcdCode, IcdPattern, MalformedCode, CHF_CODES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterRecord {
    pub patient_id: String,
    pub admission_id: String,
    pub admit_date: NaiveDate,
    pub discharge_date: NaiveDate,
    /// Primary diagnosis first.
    pub diagnosis_codes: Vec<String>,
    pub discharge_status: String,
    pub discharged_to_home: bool,
    pub in_hospital_death: bool,
    pub attributes: FeatureVector,
}

impl EncounterRecord {
    fn order_key(&self) -> (NaiveDate, NaiveDate, &str) {
        (self.admit_date, self.discharge_date, &self.admission_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub ever: bool,
    pub within_60: bool,
    pub within_30: bool,
}

/// Window lengths in days; `short` < `long`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub short: u32,
    pub long: u32,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { short: 30, long: 60 }
    }
}

pub fn label_instance(days: Option<u32>, thresholds: Thresholds) -> Labels {
    assert!(
        thresholds.short < thresholds.long,
        "thresholds must be strictly increasing"
    );
    Labels {
        ever: days.is_some(),
        within_60: days.is_some_and(|d| d <= thresholds.long),
        within_30: days.is_some_and(|d| d <= thresholds.short),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub admission_id: String,
    pub patient_id: String,
    pub features: FeatureVector,
    pub days_to_readmission: Option<u32>,
    pub label_ever: bool,
    pub label_60: bool,
    pub label_30: bool,
}

impl LabeledInstance {
    pub fn new(
        admission_id: String,
        patient_id: String,
        features: FeatureVector,
        days_to_readmission: Option<u32>,
        thresholds: Thresholds,
    ) -> Self {
        let labels = label_instance(days_to_readmission, thresholds);
        LabeledInstance {
            admission_id,
            patient_id,
            features,
            days_to_readmission,
            label_ever: labels.ever,
            label_60: labels.within_60,
            label_30: labels.within_30,
        }
    }

    /// Readmitted within `days` of discharge.
    pub fn within(&self, days: u32) -> bool {
        self.days_to_readmission.is_some_and(|d| d <= days)
    }

    /// Checks label nesting and agreement with the day count.
    pub fn labels_consistent(&self, thresholds: Thresholds) -> bool {
        let expected = label_instance(self.days_to_readmission, thresholds);
        self.label_ever == expected.ever
            && self.label_60 == expected.within_60
            && self.label_30 == expected.within_30
    }
}

pub fn is_chf_encounter(
    record: &EncounterRecord,
    code_table: &[IcdPattern],
) -> Result<bool, MalformedCode> {
    icd::matches_any(&record.diagnosis_codes, code_table)
}

/// Why a record was excluded from the index admissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    NotHeartFailure,
    InHospitalDeath,
    NotDischargedHome,
    InsufficientFollowUp,
}

/// Why a record was set aside as unusable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuarantineReason {
    MalformedDate,
    MalformedNumber,
    OutOfDomain,
    MalformedFlag,
    MalformedCode,
    DischargeBeforeAdmit,
    DuplicateAdmissionId,
    OverlappingStay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quarantined {
    /// 1-based data row in the source file, when known.
    pub row: Option<usize>,
    pub admission_id: String,
    pub reason: QuarantineReason,
    pub detail: String,
}

/// Heart-failure, discharged home, alive. Output is ordered by patient then
/// admission date. Returns the kept records and per-reason exclusion counts.
pub fn select_index_admissions<'a>(
    records: &'a [EncounterRecord],
    code_table: &[IcdPattern],
) -> (Vec<&'a EncounterRecord>, Vec<(&'a EncounterRecord, Exclusion)>) {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for r in records {
        // malformed codes are caught upstream in build_cohort
        let chf = is_chf_encounter(r, code_table).unwrap_or(false);
        let reason = if !chf {
            Some(Exclusion::NotHeartFailure)
        } else if r.in_hospital_death {
            Some(Exclusion::InHospitalDeath)
        } else if !r.discharged_to_home {
            Some(Exclusion::NotDischargedHome)
        } else {
            None
        };
        match reason {
            None => kept.push(r),
            Some(e) => excluded.push((r, e)),
        }
    }
    kept.sort_by(|a, b| {
        (&a.patient_id, a.order_key()).cmp(&(&b.patient_id, b.order_key()))
    });
    (kept, excluded)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlappingStay {
    pub next_admission_id: String,
}

/// Days from `index` discharge to the patient's next admission of any cause.
///
/// The next admission is the first encounter of the same patient that sorts
/// after `index` by (admit date, discharge date, admission id). It must not
/// start before `index` was discharged.
pub fn days_to_next_admission(
    index: &EncounterRecord,
    all: &[EncounterRecord],
) -> Result<Option<u32>, OverlappingStay> {
    let next = all
        .iter()
        .filter(|r| r.patient_id == index.patient_id && r.order_key() > index.order_key())
        .min_by(|a, b| a.order_key().cmp(&b.order_key()));
    match next {
        None => Ok(None),
        Some(n) if n.admit_date < index.discharge_date => Err(OverlappingStay {
            next_admission_id: n.admission_id.clone(),
        }),
        Some(n) => Ok(Some((n.admit_date - index.discharge_date).num_days() as u32)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortConfig {
    pub code_table: Vec<IcdPattern>,
    pub thresholds: Thresholds,
    /// Index encounters discharged fewer than this many days before the last
    /// date in the data are dropped. Zero keeps everything.
    pub min_follow_up_days: u32,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            code_table: chf_code_table(),
            thresholds: Thresholds::default(),
            min_follow_up_days: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub within_30: usize,
    pub from_31_to_60: usize,
    pub over_60: usize,
    pub never: usize,
}

impl LabelCounts {
    pub fn of(instances: &[LabeledInstance]) -> Self {
        let mut c = LabelCounts::default();
        for i in instances {
            match (i.label_30, i.label_60, i.label_ever) {
                (true, _, _) => c.within_30 += 1,
                (false, true, _) => c.from_31_to_60 += 1,
                (false, false, true) => c.over_60 += 1,
                _ => c.never += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.within_30 + self.from_31_to_60 + self.over_60 + self.never
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestionReport {
    pub rows_read: usize,
    pub encounters: usize,
    pub patients: usize,
    pub quarantined: BTreeMap<QuarantineReason, usize>,
    pub excluded: BTreeMap<Exclusion, usize>,
    pub instances: usize,
    pub labels: LabelCounts,
    pub quarantine_log: Vec<Quarantined>,
}

#[derive(Debug, Clone)]
pub struct Cohort {
    pub instances: Vec<LabeledInstance>,
    pub report: IngestionReport,
}

/// Runs validation, index selection and labeling over parsed encounters.
///
/// `quarantined` carries rows the reader could not parse; they are folded
/// into the report.
pub fn build_cohort(
    records: Vec<EncounterRecord>,
    quarantined: Vec<Quarantined>,
    rows_read: usize,
    config: &CohortConfig,
) -> Cohort {
    let mut log = quarantined;
    let mut seen = HashSet::new();
    let mut valid = Vec::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.admission_id.clone()) {
            log.push(Quarantined {
                row: None,
                admission_id: r.admission_id.clone(),
                reason: QuarantineReason::DuplicateAdmissionId,
                detail: "admission id already used by an earlier row".into(),
            });
        } else if let Err(e) = is_chf_encounter(&r, &config.code_table) {
            log.push(Quarantined {
                row: None,
                admission_id: r.admission_id.clone(),
                reason: QuarantineReason::MalformedCode,
                detail: e.to_string(),
            });
        } else {
            valid.push(r);
        }
    }

    let mut by_patient: BTreeMap<&str, Vec<&EncounterRecord>> = BTreeMap::new();
    for r in &valid {
        by_patient.entry(&r.patient_id).or_default().push(r);
    }
    for list in by_patient.values_mut() {
        list.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    }
    let cutoff = valid
        .iter()
        .map(|r| r.admit_date.max(r.discharge_date))
        .max();

    let (index, excluded) = select_index_admissions(&valid, &config.code_table);
    let mut report = IngestionReport {
        rows_read,
        encounters: valid.len(),
        patients: by_patient.len(),
        ..Default::default()
    };
    for (_, e) in &excluded {
        *report.excluded.entry(*e).or_default() += 1;
    }

    let mut instances = Vec::with_capacity(index.len());
    for idx in index {
        let history = &by_patient[idx.patient_id.as_str()];
        let pos = history
            .iter()
            .position(|r| r.admission_id == idx.admission_id)
            .expect("index record is in its patient's history");
        let days = match history.get(pos + 1) {
            None => None,
            Some(next) if next.admit_date < idx.discharge_date => {
                log.push(Quarantined {
                    row: None,
                    admission_id: idx.admission_id.clone(),
                    reason: QuarantineReason::OverlappingStay,
                    detail: format!(
                        "next admission {} starts {} before discharge {}",
                        next.admission_id, next.admit_date, idx.discharge_date
                    ),
                });
                continue;
            }
            Some(next) => Some((next.admit_date - idx.discharge_date).num_days() as u32),
        };
        if config.min_follow_up_days > 0 {
            let follow_up = cutoff.map_or(0, |c| (c - idx.discharge_date).num_days());
            if follow_up < config.min_follow_up_days as i64 {
                *report
                    .excluded
                    .entry(Exclusion::InsufficientFollowUp)
                    .or_default() += 1;
                continue;
            }
        }
        instances.push(LabeledInstance::new(
            idx.admission_id.clone(),
            idx.patient_id.clone(),
            idx.attributes.clone(),
            days,
            config.thresholds,
        ));
    }

    for q in &log {
        *report.quarantined.entry(q.reason).or_default() += 1;
    }
    report.instances = instances.len();
    report.labels = LabelCounts::of(&instances);
    report.quarantine_log = log;
    Cohort { instances, report }
}
