//! Delimited text files: raw encounters in, labeled instances in and out.
//!
//! Encounter files carry a header row, one encounter per row, ISO-8601
//! dates, `;`-separated diagnosis codes (primary first) and one column per
//! schema attribute. An empty field is a missing value.

use std::io::{Read, Write};

use chrono::NaiveDate;

use super::{EncounterRecord, LabeledInstance, QuarantineReason, Quarantined, Thresholds};
use crate::error::{Error, Result};
use crate::features::{FeatureSchema, FeatureVector, Value};

pub const ENCOUNTER_COLUMNS: [&str; 8] = [
    "patient_id",
    "admission_id",
    "admit_date",
    "discharge_date",
    "diagnosis_codes",
    "discharge_status",
    "discharged_to_home",
    "in_hospital_death",
];

pub const LABEL_COLUMNS: [&str; 6] = [
    "admission_id",
    "patient_id",
    "days_to_readmission",
    "label_ever",
    "label_60",
    "label_30",
];

/// Comma unless the header line has tabs and no commas.
fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or("");
    if header.contains('\t') && !header.contains(',') {
        b'\t'
    } else {
        b','
    }
}

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "y" | "yes" | "true" | "t" => Some(true),
        "0" | "n" | "no" | "false" | "f" => Some(false),
        _ => None,
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn column_positions(headers: &csv::StringRecord, wanted: &[&str]) -> Result<Vec<usize>> {
    wanted
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| Error::Data(format!("missing required column `{name}`")))
        })
        .collect()
}

/// Parsed encounters, rows that failed to parse, and the number of data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EncounterFile {
    pub records: Vec<EncounterRecord>,
    pub quarantined: Vec<Quarantined>,
    pub rows_read: usize,
}

pub fn read_encounters<R: Read>(mut reader: R, schema: &FeatureSchema) -> Result<EncounterFile> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::Data(format!("reading encounters: {e}")))?;
    if text.trim().is_empty() {
        return Err(Error::Data("no encounters".into()));
    }
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(&text))
        .from_reader(text.as_bytes());
    let headers = csv.headers()?.clone();
    let fixed = column_positions(&headers, &ENCOUNTER_COLUMNS)?;
    let attribute_columns: Vec<&str> = schema.features.iter().map(|f| f.column()).collect();
    let attrs = column_positions(&headers, &attribute_columns)?;

    let mut records = Vec::new();
    let mut quarantined = Vec::new();
    let mut rows_read = 0;
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        rows_read += 1;
        let field = |k: usize| row.get(fixed[k]).unwrap_or("").trim();
        let admission_id = field(1).to_string();
        let reject = |reason, detail: String| Quarantined {
            row: Some(i + 1),
            admission_id: admission_id.clone(),
            reason,
            detail,
        };
        let date = |k: usize| field(k).parse::<NaiveDate>();
        let (admit, discharge) = match (date(2), date(3)) {
            (Ok(a), Ok(d)) => (a, d),
            _ => {
                quarantined.push(reject(
                    QuarantineReason::MalformedDate,
                    format!("admit {:?} / discharge {:?}", field(2), field(3)),
                ));
                continue;
            }
        };
        if discharge < admit {
            quarantined.push(reject(
                QuarantineReason::DischargeBeforeAdmit,
                format!("discharged {discharge} before admission {admit}"),
            ));
            continue;
        }
        let (home, death) = match (parse_flag(field(6)), parse_flag(field(7))) {
            (Some(h), Some(d)) => (h, d),
            _ => {
                quarantined.push(reject(
                    QuarantineReason::MalformedFlag,
                    format!("flags {:?} / {:?}", field(6), field(7)),
                ));
                continue;
            }
        };
        let mut values = Vec::with_capacity(attrs.len());
        let mut failure = None;
        for (f, &pos) in attrs.iter().enumerate() {
            match schema.parse_value(f, row.get(pos).unwrap_or("")) {
                Ok(v) => values.push(v),
                Err(msg) => {
                    let reason = if schema.features[f].is_numeric() {
                        QuarantineReason::MalformedNumber
                    } else {
                        QuarantineReason::OutOfDomain
                    };
                    failure = Some((reason, msg));
                    break;
                }
            }
        }
        if let Some((reason, msg)) = failure {
            quarantined.push(reject(reason, msg));
            continue;
        }
        records.push(EncounterRecord {
            patient_id: field(0).to_string(),
            admission_id,
            admit_date: admit,
            discharge_date: discharge,
            diagnosis_codes: field(4)
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
            discharge_status: field(5).to_string(),
            discharged_to_home: home,
            in_hospital_death: death,
            attributes: FeatureVector(values),
        });
    }
    if rows_read == 0 {
        return Err(Error::Data("no encounters".into()));
    }
    Ok(EncounterFile {
        records,
        quarantined,
        rows_read,
    })
}

pub fn write_encounters<W: Write>(
    writer: W,
    records: &[EncounterRecord],
    schema: &FeatureSchema,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    // attribute columns that share a fixed column's name are written once
    let extra: Vec<usize> = (0..schema.len())
        .filter(|&f| !ENCOUNTER_COLUMNS.contains(&schema.features[f].column()))
        .collect();
    let mut header: Vec<&str> = ENCOUNTER_COLUMNS.to_vec();
    header.extend(extra.iter().map(|&f| schema.features[f].column()));
    csv.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.patient_id.clone(),
            r.admission_id.clone(),
            r.admit_date.to_string(),
            r.discharge_date.to_string(),
            r.diagnosis_codes.join(";"),
            r.discharge_status.clone(),
            flag(r.discharged_to_home).to_string(),
            flag(r.in_hospital_death).to_string(),
        ];
        row.extend(extra.iter().map(|&f| schema.format_value(f, r.attributes.get(f))));
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| Error::Data(format!("writing encounters: {e}")))?;
    Ok(())
}

pub fn write_labeled<W: Write>(
    writer: W,
    instances: &[LabeledInstance],
    schema: &FeatureSchema,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = LABEL_COLUMNS.to_vec();
    header.extend(schema.names());
    csv.write_record(&header)?;
    for inst in instances {
        let mut row = vec![
            inst.admission_id.clone(),
            inst.patient_id.clone(),
            inst.days_to_readmission.map(|d| d.to_string()).unwrap_or_default(),
            flag(inst.label_ever).to_string(),
            flag(inst.label_60).to_string(),
            flag(inst.label_30).to_string(),
        ];
        row.extend((0..schema.len()).map(|f| schema.format_value(f, inst.features.get(f))));
        csv.write_record(&row)?;
    }
    csv.flush().map_err(|e| Error::Data(format!("writing instances: {e}")))?;
    Ok(())
}

/// Reads a labeled-instance file. Any malformed row, or labels that disagree
/// with the day count, fail the whole read.
pub fn read_labeled<R: Read>(
    reader: R,
    schema: &FeatureSchema,
    thresholds: Thresholds,
) -> Result<Vec<LabeledInstance>> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers()?.clone();
    let fixed = column_positions(&headers, &LABEL_COLUMNS)?;
    let names: Vec<&str> = schema.names().collect();
    let attrs = column_positions(&headers, &names)?;
    let mut out = Vec::new();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let line = i + 1;
        let field = |k: usize| row.get(fixed[k]).unwrap_or("").trim();
        let days = match field(2) {
            "" => None,
            s => Some(s.parse::<u32>().map_err(|_| {
                Error::Data(format!("row {line}: bad days_to_readmission {s:?}"))
            })?),
        };
        let label = |k: usize| {
            parse_flag(field(k))
                .ok_or_else(|| Error::Data(format!("row {line}: bad {} flag", LABEL_COLUMNS[k])))
        };
        let values = attrs
            .iter()
            .enumerate()
            .map(|(f, &pos)| schema.parse_value(f, row.get(pos).unwrap_or("")))
            .collect::<std::result::Result<Vec<Value>, String>>()
            .map_err(|e| Error::Data(format!("row {line}: {e}")))?;
        let inst = LabeledInstance {
            admission_id: field(0).to_string(),
            patient_id: field(1).to_string(),
            features: FeatureVector(values),
            days_to_readmission: days,
            label_ever: label(3)?,
            label_60: label(4)?,
            label_30: label(5)?,
        };
        if !inst.labels_consistent(thresholds) {
            return Err(Error::Data(format!(
                "row {line}: labels disagree with days_to_readmission"
            )));
        }
        out.push(inst);
    }
    Ok(out)
}
