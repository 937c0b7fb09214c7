//! Model-ready features: schema, imputation, chi-square selection and
//! classifier encodings.

pub mod chi2;
pub mod encode;
pub mod impute;
pub mod schema;
pub mod selection;

pub use chi2::{chi_square_score, chi_square_table, contingency_table};
pub use encode::SvmEncoder;
pub use impute::{drop_null_rows, impute_ejection_fraction, Imputer, NullDropReport, Statistic};
pub use schema::{FeatureDef, FeatureSchema, FeatureVector, Kind, Value, EJECTION_FRACTION};
pub use selection::{select_features, FeatureSelection, ScoredFeature, DEFAULT_K};
