//! Versioned, self-describing model files.
//!
//! A bundle records its format id and version, the fingerprint of the schema
//! the model was trained on, the settings used, and the fitted pipeline.
//! Loading checks all three identifiers before handing the model out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::pipeline::{ModelSettings, TrainedPipeline};

pub const MODEL_FORMAT: &str = "readmit-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub version: u32,
    pub schema_hash: String,
    pub seed: u64,
    pub settings: ModelSettings,
    pub pipeline: TrainedPipeline,
}

impl ModelBundle {
    pub fn new(schema: &FeatureSchema, settings: ModelSettings, seed: u64, pipeline: TrainedPipeline) -> Self {
        ModelBundle {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            schema_hash: schema.fingerprint(),
            seed,
            settings,
            pipeline,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    /// Parses a bundle and checks it belongs to `schema`.
    pub fn from_json(text: &str, schema: &FeatureSchema) -> Result<Self> {
        let head: serde_json::Value = serde_json::from_str(text)?;
        let format = head.get("format").and_then(|v| v.as_str());
        if format != Some(MODEL_FORMAT) {
            return Err(Error::Data(format!(
                "not a model file: format is {format:?}, expected {MODEL_FORMAT:?}"
            )));
        }
        let version = head.get("version").and_then(|v| v.as_u64());
        if version != Some(MODEL_VERSION as u64) {
            return Err(Error::Data(format!(
                "unsupported model version {version:?}, expected {MODEL_VERSION}"
            )));
        }
        let bundle: ModelBundle = serde_json::from_value(head)?;
        let expected = schema.fingerprint();
        if bundle.schema_hash != expected {
            return Err(Error::Data(format!(
                "model was trained on schema {}, current schema is {expected}",
                bundle.schema_hash
            )));
        }
        Ok(bundle)
    }
}
