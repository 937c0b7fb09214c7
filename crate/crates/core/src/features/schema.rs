//! Attribute schema for encounter and instance files.
//!
//! A schema is an ordered list of attributes, each either numeric or
//! categorical with a closed value domain. Every feature vector in the crate
//! is aligned to a schema's order.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    /// Column header in encounter files, when it differs from `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub domain: Vec<String>,
}

impl FeatureDef {
    pub fn numeric(name: &str) -> Self {
        FeatureDef {
            name: name.to_string(),
            column: None,
            kind: Kind::Numeric,
            domain: Vec::new(),
        }
    }

    pub fn categorical<S: AsRef<str>>(name: &str, domain: &[S]) -> Self {
        FeatureDef {
            name: name.to_string(),
            column: None,
            kind: Kind::Categorical,
            domain: domain.iter().map(|s| s.as_ref().to_string()).collect(),
        }
    }

    pub fn column(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }

    pub fn is_numeric(&self) -> bool {
        self.kind == Kind::Numeric
    }

    /// Number of categorical levels; zero for numeric features.
    pub fn levels(&self) -> usize {
        self.domain.len()
    }
}

/// One attribute value. Categories are stored as indices into the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Missing,
    Numeric(f64),
    Category(u32),
}

impl Value {
    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Numeric(x) => Some(x),
            Value::Category(c) => Some(c as f64),
            Value::Missing => None,
        }
    }
}

/// Dense attribute values aligned to a [`FeatureSchema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<Value>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Value {
        self.0[i]
    }

    pub fn has_missing(&self) -> bool {
        self.0.iter().any(Value::is_missing)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    #[serde(rename = "feature")]
    pub features: Vec<FeatureDef>,
}

/// Name of the ejection-fraction attribute, the one attribute that is imputed.
pub const EJECTION_FRACTION: &str = "ejection_fraction";

pub const COMORBIDITY_FLAGS: [&str; 34] = [
    "congestive_heart_failure",
    "acute_coronary_syndrome",
    "arrhythmias",
    "cardio_respiratory_failure_shock",
    "valvular_rheumatic_heart_disease",
    "vascular_circulatory_disease",
    "chronic_atherosclerosis",
    "other_heart_disease",
    "hemiplegia_paralysis_disability",
    "stroke",
    "renal_failure",
    "copd",
    "diabetes_dm_complications",
    "fluid_electrolyte_disorders",
    "other_urinary_tract_disorders",
    "decubitus_skin_ulcer",
    "other_gastrointestinal_disorders",
    "peptic_ulcer_hemorrhage",
    "severe_hematological_disorders",
    "nephritis",
    "dementia_senility",
    "metastatic_cancer_leukemia",
    "cancer",
    "liver_biliary_disease",
    "end_stage_renal_disease_dialysis",
    "asthma",
    "anemia_blood_disease",
    "pneumonia",
    "drug_alcohol_abuse_psychosis",
    "major_psych_disorders",
    "depression",
    "other_psychiatric_disorders",
    "fibrosis_chronic_lung_disorders",
    "protein_calorie_malnutrition",
];

pub const DISCHARGE_STATUSES: [&str; 15] = [
    "home",
    "home_health",
    "rehab_facility",
    "skilled_nursing",
    "intermediate_care",
    "hospice_home",
    "hospice_facility",
    "transfer_acute",
    "transfer_psych",
    "long_term_care",
    "against_medical_advice",
    "court_law_enforcement",
    "swing_bed",
    "expired",
    "other",
];

impl FeatureSchema {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self> {
        let schema = FeatureSchema { features };
        schema.validate()?;
        Ok(schema)
    }

    /// The fifty heart-failure attributes: demographics, discharge
    /// disposition, clinical measurements and 34 comorbidity flags.
    pub fn heart_failure() -> Self {
        let numbered = |prefix: &str, n: usize| -> Vec<String> {
            (1..=n).map(|i| format!("{prefix}{i:02}")).collect()
        };
        let mut features = vec![
            FeatureDef::numeric("age"),
            FeatureDef::categorical("gender", &["M", "F"]),
            FeatureDef::categorical(
                "marital_status",
                &[
                    "married",
                    "single",
                    "divorced",
                    "widowed",
                    "separated",
                    "domestic_partner",
                    "life_partner",
                    "legally_separated",
                    "unknown",
                ],
            ),
            FeatureDef::categorical(
                "ethnic_group",
                &[
                    "caucasian",
                    "african_american",
                    "asian",
                    "hispanic",
                    "native_american",
                    "pacific_islander",
                    "multiracial",
                    "other",
                    "declined",
                ],
            ),
            FeatureDef::categorical(
                "discharge_followup_plan",
                &["2_days", "5_days", "7_days", "14_days", "30_days", "as_needed", "none"],
            ),
            FeatureDef::categorical("discharge_destination", &numbered("dest_", 70)),
            FeatureDef::categorical("discharge_status", &DISCHARGE_STATUSES),
            FeatureDef::categorical(
                "admit_source",
                &[
                    "emergency_room",
                    "physician_referral",
                    "clinic",
                    "transfer_hospital",
                    "transfer_snf",
                    "other",
                ],
            ),
            FeatureDef::categorical("admit_type", &["elective", "emergency", "urgent", "trauma"]),
            FeatureDef::categorical("blood_pressure", &numbered("bp_", 9)),
            FeatureDef::numeric(EJECTION_FRACTION),
            FeatureDef::numeric("secondary_diagnosis_count"),
            FeatureDef::categorical("apr_drg_severity", &["1", "2", "3", "4"]),
            FeatureDef::categorical("apr_drg_mortality", &["1", "2", "3", "4"]),
            FeatureDef::numeric("length_of_stay"),
            FeatureDef::categorical("is_hf_primary", &["Y", "N"]),
        ];
        features.extend(
            COMORBIDITY_FLAGS
                .iter()
                .map(|name| FeatureDef::categorical(name, &["0", "1"])),
        );
        FeatureSchema { features }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: FeatureSchema =
            toml::from_str(text).map_err(|e| Error::Config(format!("schema: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes to toml")
    }

    fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config("schema declares no features".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        let mut columns = std::collections::BTreeSet::new();
        for def in &self.features {
            if !names.insert(def.name.as_str()) {
                return Err(Error::Config(format!("duplicate feature name `{}`", def.name)));
            }
            if !columns.insert(def.column()) {
                return Err(Error::Config(format!("duplicate column `{}`", def.column())));
            }
            match def.kind {
                Kind::Numeric if !def.domain.is_empty() => {
                    return Err(Error::Config(format!(
                        "numeric feature `{}` declares a domain",
                        def.name
                    )))
                }
                Kind::Categorical => {
                    if def.domain.is_empty() {
                        return Err(Error::Config(format!(
                            "categorical feature `{}` has an empty domain",
                            def.name
                        )));
                    }
                    let distinct: std::collections::BTreeSet<_> = def.domain.iter().collect();
                    if distinct.len() != def.domain.len() {
                        return Err(Error::Config(format!(
                            "categorical feature `{}` repeats a domain value",
                            def.name
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    /// SHA-256 over the canonical JSON form; identifies the schema a model was trained on.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("schema serializes to json");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Parses one raw field. Empty text is missing.
    pub fn parse_value(&self, index: usize, raw: &str) -> std::result::Result<Value, String> {
        let def = &self.features[index];
        let raw = raw.trim();
        if raw.is_empty() {
            return Ok(Value::Missing);
        }
        match def.kind {
            Kind::Numeric => match raw.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Value::Numeric(x)),
                _ => Err(format!("`{}`: not a finite number: {raw:?}", def.name)),
            },
            Kind::Categorical => def
                .domain
                .iter()
                .position(|d| d == raw)
                .map(|i| Value::Category(i as u32))
                .ok_or_else(|| format!("`{}`: value {raw:?} outside declared domain", def.name)),
        }
    }

    pub fn format_value(&self, index: usize, value: Value) -> String {
        match value {
            Value::Missing => String::new(),
            Value::Numeric(x) => format!("{x}"),
            Value::Category(c) => self.features[index]
                .domain
                .get(c as usize)
                .cloned()
                .unwrap_or_else(|| "OTHER".to_string()),
        }
    }
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::heart_failure()
    }
}
