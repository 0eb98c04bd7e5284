//! Command-line surface. `main.rs` only parses and maps errors to exit codes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::{read_dataset, write_dataset, ConstantsFile, Dataset, FeatureId};
use crate::efs::Metric;
use crate::error::Error;
use crate::pca::fit_pca;
use crate::pipeline::{
    load_library, normalize, read_labeled, run_all, score_model, write_decision_grids,
    write_pca_outputs, OutputDir, PipelineError, RunConfig, RunSummary, Stage,
};
use crate::preprocess::{label_dataset, split, SplitConfig, Thresholds};
use crate::report;
use crate::sampling::{
    generate_dataset, SamplerConfig, DEFAULT_MAX_REJECTIONS, DEFAULT_N_PER_MATERIAL, DEFAULT_SEED,
};
use crate::surrogate::{ingest_external_loads, simulate_dataset, SurrogateConfig};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PIPELINE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Pipeline(PipelineError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Pipeline(_) => EXIT_PIPELINE,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Pipeline(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for CliError {}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Pipeline(e)
    }
}

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "envelope-ml",
    version,
    about = "Envelope-material load classification and feature selection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline: every CSV plus summary.json in --out.
    Run(RunArgs),
    /// Sample the material library into an unlabeled dataset.
    Generate(GenerateArgs),
    /// Attach surrogate loads.
    Simulate(SimulateArgs),
    /// Attach externally computed loads from a `row_index,load` CSV.
    Ingest(IngestArgs),
    /// Label rows from their loads.
    Label(LabelArgs),
    /// Split a labeled dataset into train and test files.
    Split(SplitArgs),
    /// PCA outputs (scree, loadings, PC scores) for a training file.
    Pca(PcaArgs),
    /// Exhaustive feature selection over all feature subsets.
    Efs(EfsArgs),
    /// Fit and score an LDA model on chosen features.
    Train(TrainArgs),
    /// Write the built-in constants and surrogate config as JSON.
    ExportConfig(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_N_PER_MATERIAL)]
    pub n_per_material: usize,
    /// JSON with `materials` and `system`, replacing the built-in library.
    #[arg(long)]
    pub constants: Option<PathBuf>,
}

impl SamplingArgs {
    fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            seed: self.seed,
            n_per_material: self.n_per_material,
            max_rejections_per_draw: DEFAULT_MAX_REJECTIONS,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 75.0)]
    pub low_max: f64,
    #[arg(long, default_value_t = 90.0)]
    pub high_min: f64,
}

impl ThresholdArgs {
    fn thresholds(&self) -> Result<Thresholds, CliError> {
        Thresholds::new(self.low_max, self.high_min).map_err(usage)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SplitOptions {
    #[arg(long, default_value_t = 0.35)]
    pub train_frac: f64,
    /// Defaults to the sampling seed for `run`, 42 otherwise.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Shuffle all rows together instead of per class.
    #[arg(long)]
    pub no_stratify: bool,
}

impl SplitOptions {
    fn config(&self, default_seed: u64) -> Result<SplitConfig, CliError> {
        let cfg = SplitConfig {
            train_fraction: self.train_frac,
            seed: self.split_seed.unwrap_or(default_seed),
            stratified: !self.no_stratify,
        };
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// JSON surrogate parameters; omitted fields keep their defaults.
    #[arg(long)]
    pub surrogate_config: Option<PathBuf>,
    /// Use loads from this CSV instead of the surrogate.
    #[arg(long)]
    pub ingest_loads: Option<PathBuf>,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub split: SplitOptions,
    /// `train` or `cv5` (any `cv<k>`, k >= 2).
    #[arg(long, default_value = "train")]
    pub efs_metric: Metric,
    /// Fold seed for cross-validated metrics; defaults to the split seed.
    #[arg(long)]
    pub cv_seed: Option<u64>,
    /// Fit the normalizer on the full dataset rather than the training rows.
    #[arg(long)]
    pub normalize_on_all: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn read_surrogate(path: Option<&Path>) -> Result<SurrogateConfig, CliError> {
    match path {
        Some(p) => SurrogateConfig::read(p).map_err(usage),
        None => Ok(SurrogateConfig::default()),
    }
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        let sampler = self.sampling.sampler();
        sampler.validate().map_err(usage)?;
        let split = self.split.config(sampler.seed)?;
        Ok(RunConfig {
            sampler,
            surrogate: read_surrogate(self.surrogate_config.as_deref())?,
            surrogate_config_path: self.surrogate_config.clone(),
            constants_path: self.sampling.constants.clone(),
            ingest_loads: self.ingest_loads.clone(),
            thresholds: self.thresholds.thresholds()?,
            split,
            efs_metric: self.efs_metric,
            cv_seed: self.cv_seed.unwrap_or(split.seed),
            normalize_on_all: self.normalize_on_all,
            out_dir: self.out.clone(),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// JSON surrogate parameters; omitted fields keep their defaults.
    #[arg(long)]
    pub surrogate_config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub loads: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub split: SplitOptions,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct NormalizationArgs {
    /// Labeled training CSV (raw features).
    #[arg(long)]
    pub train: PathBuf,
    /// Fit the normalizer on this CSV instead of the training file.
    #[arg(long)]
    pub normalize_with: Option<PathBuf>,
}

impl NormalizationArgs {
    fn load(&self, test: Option<&Path>) -> Result<(Dataset, Dataset), PipelineError> {
        let train = read_labeled(&self.train).stage("read")?;
        let test = match test {
            Some(p) => read_labeled(p).stage("read")?,
            None => Dataset::default(),
        };
        let source = match &self.normalize_with {
            Some(p) => read_dataset(p).stage("read")?,
            None => train.clone(),
        };
        let (_, tn, sn) = normalize(&source, &train, &test).stage("normalize")?;
        Ok((tn, sn))
    }
}

#[derive(Debug, Clone, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub data: NormalizationArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EfsArgs {
    #[command(flatten)]
    pub data: NormalizationArgs,
    #[arg(long, default_value = "train")]
    pub efs_metric: Metric,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub cv_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: NormalizationArgs,
    #[arg(long)]
    pub test: PathBuf,
    /// Comma-separated feature names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub features: Vec<FeatureId>,
    /// Write one decision grid per feature pair into this directory.
    #[arg(long)]
    pub grid_dir: Option<PathBuf>,
    /// Write the accuracy JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub enum Outcome {
    Summary(Box<RunSummary>),
    Message(String),
    Silent,
}

fn write(d: &Dataset, path: &Path) -> Result<Outcome, CliError> {
    write_dataset(d, path).stage("write")?;
    Ok(Outcome::Silent)
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Run(args) => {
            let cfg = args.to_config()?;
            Ok(Outcome::Summary(Box::new(run_all(&cfg)?)))
        }
        Command::Generate(args) => {
            let sampler = args.sampling.sampler();
            sampler.validate().map_err(usage)?;
            let library = load_library(args.sampling.constants.as_deref()).map_err(usage)?;
            write(
                &generate_dataset(&library, &sampler).stage("generate")?,
                &args.out,
            )
        }
        Command::Simulate(args) => {
            let cfg = read_surrogate(args.surrogate_config.as_deref())?;
            let d = read_dataset(&args.input).stage("read")?;
            write(&simulate_dataset(&d, &cfg).stage("simulate")?, &args.out)
        }
        Command::Ingest(args) => {
            let d = read_dataset(&args.input).stage("read")?;
            write(
                &ingest_external_loads(&d, &args.loads).stage("ingest")?,
                &args.out,
            )
        }
        Command::Label(args) => {
            let t = args.thresholds.thresholds()?;
            let d = read_dataset(&args.input).stage("read")?;
            write(&label_dataset(&d, &t).stage("label")?, &args.out)
        }
        Command::Split(args) => {
            let cfg = args.split.config(DEFAULT_SEED)?;
            let d = read_dataset(&args.input).stage("read")?;
            let parts = split(&d, &cfg).stage("split")?;
            write_dataset(&parts.train, &args.train_out).stage("write")?;
            write_dataset(&parts.test, &args.test_out).stage("write")?;
            Ok(Outcome::Message(format!(
                "train {} / test {}",
                parts.train.len(),
                parts.test.len()
            )))
        }
        Command::Pca(args) => {
            let (train, _) = args.data.load(None)?;
            let model = fit_pca(&train).stage("pca")?;
            let mut out = OutputDir::create(&args.out_dir).stage("write")?;
            write_pca_outputs(&model, &train, &mut out).stage("pca")?;
            let top = model
                .top_features(crate::pipeline::SELECTED_FEATURES)
                .stage("pca")?;
            let names: Vec<&str> = top.iter().map(|f| f.name()).collect();
            Ok(Outcome::Message(format!(
                "top features by |PC1|: {}",
                names.join(",")
            )))
        }
        Command::Efs(args) => {
            let (train, _) = args.data.load(None)?;
            let rep =
                crate::pipeline::efs_on(&train, args.efs_metric, args.cv_seed).stage("efs")?;
            report::write_efs(&rep, &args.out).stage("efs")?;
            let lines: Vec<String> = rep
                .best_per_size
                .iter()
                .map(|(k, r)| {
                    format!(
                        "{k}: {} ({})",
                        report::subset_name(&r.subset),
                        r.metric_value
                    )
                })
                .collect();
            Ok(Outcome::Message(lines.join("\n")))
        }
        Command::Train(args) => {
            let (train, test) = args.data.load(Some(&args.test))?;
            if let Some(dir) = &args.grid_dir {
                let mut out = OutputDir::create(dir).stage("write")?;
                write_decision_grids(&train, &args.features, &mut out).stage("train")?;
            }
            let score = score_model(&train, &test, &args.features).stage("train")?;
            let json = serde_json::to_string_pretty(&score)
                .map_err(Error::from)
                .stage("write")?;
            match &args.out {
                Some(p) => {
                    fs::write(p, json + "\n")
                        .map_err(|e| Error::io(p, e))
                        .stage("write")?;
                    Ok(Outcome::Silent)
                }
                None => Ok(Outcome::Message(json)),
            }
        }
        Command::ExportConfig(args) => {
            let mut out = OutputDir::create(&args.out_dir).stage("write")?;
            let constants = ConstantsFile::default().to_json().stage("write")?;
            let surrogate = serde_json::to_string_pretty(&SurrogateConfig::default())
                .map_err(Error::from)
                .stage("write")?;
            for (name, text) in [("constants.json", constants), ("surrogate.json", surrogate)] {
                let p = out.file(name);
                fs::write(&p, text + "\n")
                    .map_err(|e| Error::io(&p, e))
                    .stage("write")?;
            }
            Ok(Outcome::Silent)
        }
    }
}
