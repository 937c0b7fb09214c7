//! The `readmit` command line: generate, ingest, train, evaluate, predict.
//!
//! Every subcommand reads an optional TOML run configuration (`--config`)
//! whose sections are overridden by flags. Outputs are written to temporary
//! files in the output directory and renamed into place only after all of
//! them were produced, so a failed run leaves no partial files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cohort::io::{read_encounters, read_labeled, write_encounters, write_labeled};
use crate::cohort::{build_cohort, CohortConfig, LabeledInstance};
use crate::error::{Error, ErrorKind, Result};
use crate::eval::{evaluate, EvalSettings, FoldStrategy};
use crate::features::FeatureSchema;
use crate::model_io::ModelBundle;
use crate::pipeline::{Configuration, ModelSettings, TrainedPipeline};
use crate::synth::{generate_cohort, SynthConfig};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "readmit", version, about = "Cascade classification of 30-day heart-failure readmission")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic encounter file and its schema.
    Generate(GenerateArgs),
    /// Build labeled index admissions from an encounter file.
    Ingest(IngestArgs),
    /// Fit one configuration on a labeled file and save the model.
    Train(TrainArgs),
    /// Cross-validate configurations on a labeled file.
    Evaluate(EvaluateArgs),
    /// Score a labeled file with a saved model.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Attribute schema (TOML); defaults to the built-in heart-failure schema.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Root seed for every random step.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Rescale the strata to this many encounters.
    #[arg(long)]
    pub n_total: Option<usize>,
    /// Probability that a signal attribute follows its stratum's distribution.
    #[arg(long)]
    pub signal: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    /// Encounter file (CSV or tab-separated).
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Fixed layer-2 window in days instead of the balancing choice.
    #[arg(long)]
    pub layer2_threshold: Option<u32>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Labeled instance file.
    #[arg(long)]
    pub input: PathBuf,
    /// Configuration to fit: nb, svm, mlc1 or mlc2.
    #[arg(long, default_value = "mlc1")]
    pub configs: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Labeled instance file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Comma-separated subset of nb, svm, mlc1, mlc2.
    #[arg(long)]
    pub configs: Option<String>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Evaluate folds one after another on the calling thread.
    #[arg(long, alias = "deterministic-serial")]
    pub serial: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    /// Model file written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled instance file; only the attributes are used.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum StrategyArg {
    Stratified,
    Shuffled,
    Grouped,
}

impl From<StrategyArg> for FoldStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Stratified => FoldStrategy::Stratified,
            StrategyArg::Shuffled => FoldStrategy::Shuffled,
            StrategyArg::Grouped => FoldStrategy::Grouped,
        }
    }
}

/// Evaluation options of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub folds: usize,
    pub strategy: FoldStrategy,
    pub configurations: Vec<Configuration>,
    pub parallel: bool,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        let e = EvalSettings::default();
        EvaluateSection {
            folds: e.folds,
            strategy: e.strategy,
            configurations: e.configurations,
            parallel: e.parallel,
        }
    }
}

/// The `--config` file. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub synth: SynthConfig,
    pub cohort: CohortConfig,
    pub evaluate: EvaluateSection,
    pub model: ModelSettings,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("run configuration: {e}")))
    }

    fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_toml_str(&read_text(p)?),
            None => Ok(RunConfig::default()),
        }
    }
}

/// Process exit status for an error of `kind`.
pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Internal => 4,
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_schema(path: Option<&Path>) -> Result<FeatureSchema> {
    match path {
        Some(p) => FeatureSchema::from_toml_str(&read_text(p)?),
        None => Ok(FeatureSchema::heart_failure()),
    }
}

fn load_labeled(path: &Path, schema: &FeatureSchema, cohort: &CohortConfig) -> Result<Vec<LabeledInstance>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_labeled(std::io::BufReader::new(file), schema, cohort.thresholds)
}

/// Output files staged in the target directory and published together.
struct Outputs {
    dir: PathBuf,
    staged: Vec<(tempfile::NamedTempFile, PathBuf)>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            staged: Vec::new(),
        })
    }

    fn stage(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let target = self.dir.join(name);
        let tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .tempfile_in(&self.dir)
            .map_err(|e| Error::io(&target, e))?;
        let mut w = std::io::BufWriter::new(tmp.as_file());
        write(&mut w)?;
        w.flush().map_err(|e| Error::io(&target, e))?;
        drop(w);
        self.staged.push((tmp, target));
        Ok(())
    }

    fn stage_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        self.stage(name, |w| w.write_all(text.as_bytes()).map_err(|e| Error::io(&path, e)))
    }

    fn publish(self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (tmp, target) in self.staged {
            tmp.persist(&target).map_err(|e| Error::io(&target, e.error))?;
            written.push(target);
        }
        Ok(written)
    }
}

fn apply_model_args(settings: &mut ModelSettings, args: &ModelArgs) {
    if let Some(t) = args.layer2_threshold {
        settings.layer2_threshold = Some(t);
    }
}

pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Predict(a) => cmd_predict(a),
    }
}

pub fn cmd_generate(args: GenerateArgs) -> Result<Vec<PathBuf>> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let schema = load_schema(args.common.schema.as_deref())?;
    let mut config = run.synth;
    if let Some(seed) = args.common.seed.or(run.seed) {
        config.seed = seed;
    }
    if args.n_total.is_some() {
        config.n_total = args.n_total;
    }
    if let Some(s) = args.signal {
        config.signal_strength = s;
    }
    let records = generate_cohort(&config, &schema)?;
    log::info!("generated {} encounters", records.len());

    let mut out = Outputs::new(&args.common.out_dir)?;
    out.stage("encounters.csv", |w| write_encounters(w, &records, &schema))?;
    out.stage_text("schema.toml", &schema.to_toml_string())?;
    out.publish()
}

pub fn cmd_ingest(args: IngestArgs) -> Result<Vec<PathBuf>> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let schema = load_schema(args.common.schema.as_deref())?;
    let file = fs::File::open(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let encounters = read_encounters(std::io::BufReader::new(file), &schema)?;
    let cohort = build_cohort(
        encounters.records,
        encounters.quarantined,
        encounters.rows_read,
        &run.cohort,
    );
    let r = &cohort.report;
    log::info!(
        "{} rows, {} quarantined, {} index admissions",
        r.rows_read,
        r.quarantine_log.len(),
        r.instances
    );
    if cohort.instances.is_empty() {
        return Err(Error::Data("no index admissions remain after cohort selection".into()));
    }

    let mut out = Outputs::new(&args.common.out_dir)?;
    out.stage("labeled.csv", |w| write_labeled(w, &cohort.instances, &schema))?;
    let mut report = serde_json::to_string_pretty(&cohort.report)?;
    report.push('\n');
    out.stage_text("ingest_report.json", &report)?;
    out.publish()
}

pub fn cmd_train(args: TrainArgs) -> Result<Vec<PathBuf>> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let schema = load_schema(args.common.schema.as_deref())?;
    let configurations = Configuration::parse_list(&args.configs)?;
    let [configuration] = configurations[..] else {
        return Err(Error::Config(format!(
            "train fits one configuration, got `{}`",
            args.configs
        )));
    };
    let mut settings = run.model;
    apply_model_args(&mut settings, &args.model);
    let seed = args.common.seed.or(run.seed).unwrap_or(DEFAULT_SEED);

    let instances = load_labeled(&args.input, &schema, &run.cohort)?;
    let exempt: Vec<usize> = schema.index_of(crate::features::EJECTION_FRACTION).into_iter().collect();
    let (instances, dropped) = crate::features::drop_null_rows(instances, &schema, &exempt);
    log::info!("training {} on {} rows ({} dropped)", configuration.title(), dropped.kept, dropped.dropped);
    let pipeline = TrainedPipeline::fit(&schema, &instances, configuration, &settings, seed)?;
    let bundle = ModelBundle::new(&schema, settings, seed, pipeline);

    let mut out = Outputs::new(&args.common.out_dir)?;
    out.stage_text("model.json", &bundle.to_json())?;
    out.publish()
}

pub fn cmd_evaluate(args: EvaluateArgs) -> Result<Vec<PathBuf>> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let schema = load_schema(args.common.schema.as_deref())?;
    let mut settings = EvalSettings {
        seed: args.common.seed.or(run.seed).unwrap_or(DEFAULT_SEED),
        folds: args.folds.unwrap_or(run.evaluate.folds),
        strategy: args.strategy.map_or(run.evaluate.strategy, Into::into),
        configurations: match &args.configs {
            Some(list) => Configuration::parse_list(list)?,
            None => run.evaluate.configurations.clone(),
        },
        parallel: run.evaluate.parallel && !args.serial,
        model: run.model,
    };
    apply_model_args(&mut settings.model, &args.model);
    if settings.configurations.is_empty() {
        return Err(Error::Config("no configurations selected".into()));
    }

    let instances = load_labeled(&args.input, &schema, &run.cohort)?;
    let report = evaluate(&schema, instances, &settings)?;

    let mut out = Outputs::new(&args.common.out_dir)?;
    out.stage_text("report.json", &report.to_json())?;
    out.stage_text("report.txt", &report.to_table())?;
    out.publish()
}

pub fn cmd_predict(args: PredictArgs) -> Result<Vec<PathBuf>> {
    let run = RunConfig::load(args.common.config.as_deref())?;
    let schema = load_schema(args.common.schema.as_deref())?;
    let bundle = ModelBundle::from_json(&read_text(&args.model)?, &schema)?;
    let instances = load_labeled(&args.input, &schema, &run.cohort)?;

    let mut out = Outputs::new(&args.common.out_dir)?;
    out.stage("predictions.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["admission_id", "patient_id", "predicted_30", "score"])?;
        for inst in &instances {
            let p = bundle.pipeline.predict(&inst.features);
            csv.write_record([
                inst.admission_id.as_str(),
                inst.patient_id.as_str(),
                if p.label { "1" } else { "0" },
                &format!("{}", p.score),
            ])?;
        }
        csv.flush().map_err(|e| Error::Data(format!("writing predictions: {e}")))
    })?;
    out.publish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_sections_are_optional() {
        let c = RunConfig::from_toml_str("seed = 7\n[evaluate]\nfolds = 5\nconfigurations = [\"mlc2\"]\n").unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.evaluate.folds, 5);
        assert_eq!(c.evaluate.configurations, vec![Configuration::Mlc2]);
        assert_eq!(c.synth, SynthConfig::default());
        assert!(RunConfig::from_toml_str("[evaluate]\nfold = 5\n").is_err());
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [ErrorKind::Config, ErrorKind::Data, ErrorKind::Internal].map(exit_code);
        assert_eq!(codes, [2, 3, 4]);
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::parse_from(["readmit", "evaluate", "--input", "x.csv", "--configs", "mlc2", "--serial"]);
        match cli.command {
            Command::Evaluate(a) => {
                assert!(a.serial);
                assert_eq!(a.configs.as_deref(), Some("mlc2"));
            }
            other => panic!("{other:?}"),
        }
    }
}
