//! End-to-end run: generate, simulate (or ingest), label, split, normalize,
//! PCA, EFS, and the two 4-feature LDA models, with every output file.
//!
//! The stage helpers here are shared by `run_all` and the individual CLI
//! subcommands, so both paths write identical bytes for identical inputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::dataset::{
    read_dataset, write_dataset, ConstantsFile, Dataset, FeatureId, MaterialLibrary, N_FEATURES,
};
use crate::efs::{run_efs, EfsReport, Metric, Schedule};
use crate::error::Error;
use crate::lda::{decision_grid, fit_lda};
use crate::pca::{fit_pca, PcaModel};
use crate::preprocess::{
    apply_normalizer, fit_normalizer, label_dataset, split, Normalizer, SplitConfig, Thresholds,
};
use crate::report;
use crate::sampling::{generate_dataset, SamplerConfig};
use crate::surrogate::{ingest_external_loads, simulate_dataset, SurrogateConfig};

pub const SELECTED_FEATURES: usize = 4;
pub const GRID_RESOLUTION: usize = 101;
/// Fraction of the data range added on each side of a decision grid.
pub const GRID_PADDING: f64 = 0.05;
pub const SCORE_PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub source: Error,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

pub(crate) trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, PipelineError>;
}

impl<T> Stage<T> for Result<T, Error> {
    fn stage(self, stage: &'static str) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub sampler: SamplerConfig,
    pub surrogate: SurrogateConfig,
    pub surrogate_config_path: Option<PathBuf>,
    pub constants_path: Option<PathBuf>,
    pub ingest_loads: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub split: SplitConfig,
    pub efs_metric: Metric,
    pub cv_seed: u64,
    /// Fit the normalizer on the whole labeled dataset instead of the training rows.
    pub normalize_on_all: bool,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sampler = SamplerConfig::default();
        RunConfig {
            sampler,
            surrogate: SurrogateConfig::default(),
            surrogate_config_path: None,
            constants_path: None,
            ingest_loads: None,
            thresholds: Thresholds::default(),
            split: SplitConfig {
                seed: sampler.seed,
                ..SplitConfig::default()
            },
            efs_metric: Metric::TrainAccuracy,
            cv_seed: sampler.seed,
            normalize_on_all: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub low: usize,
    pub medium: usize,
    pub high: usize,
    pub total: usize,
}

impl ClassCounts {
    pub fn of(dataset: &Dataset) -> Self {
        let [low, medium, high] = dataset.class_counts();
        ClassCounts {
            low,
            medium,
            high,
            total: dataset.len(),
        }
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.low, self.medium, self.high]
    }

    /// Share of the largest class.
    pub fn majority_share(&self) -> f64 {
        *self.as_array().iter().max().unwrap() as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    pub dataset: ClassCounts,
    pub train: ClassCounts,
    pub test: ClassCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaSummary {
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub cumulative_ratio: Vec<f64>,
    pub top_features: Vec<FeatureId>,
    pub pc1_abs_loadings: Vec<(FeatureId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestSubset {
    pub size: usize,
    pub features: Vec<FeatureId>,
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfsSummary {
    pub metric: Metric,
    pub subsets_evaluated: usize,
    pub fit_failures: usize,
    pub best_per_size: Vec<BestSubset>,
    pub overall_best: BestSubset,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelScore {
    pub features: Vec<FeatureId>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Baseline {
    /// Largest class share in the test set.
    pub test_majority_share: f64,
    pub train_majority_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub counts: Counts,
    pub pca: PcaSummary,
    pub efs: EfsSummary,
    pub pca_selected: ModelScore,
    pub efs_selected: ModelScore,
    pub baseline: Baseline,
    pub files: Vec<String>,
}

/// Tracks files written into the output directory so a failed run can remove them.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, Error> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Registers `name` and returns its full path.
    pub fn file(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        path
    }

    pub fn names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    pub fn discard(self) {
        for path in self.written {
            let _ = fs::remove_file(path);
        }
    }
}

pub fn load_library(path: Option<&Path>) -> Result<MaterialLibrary, Error> {
    Ok(match path {
        Some(p) => ConstantsFile::read(p)?.materials,
        None => ConstantsFile::default().materials,
    })
}

/// Normalized copies of train and test, with the normalizer fit on `source`.
pub fn normalize(
    source: &Dataset,
    train: &Dataset,
    test: &Dataset,
) -> Result<(Normalizer, Dataset, Dataset), Error> {
    let norm = fit_normalizer(source)?;
    let tn = apply_normalizer(&norm, train);
    let sn = apply_normalizer(&norm, test);
    Ok((norm, tn, sn))
}

pub fn scores_file_name(i: usize, j: usize) -> String {
    format!("scores_{i}_{j}.csv")
}

pub fn grid_file_name(a: FeatureId, b: FeatureId) -> String {
    format!("decision_grid_{a}_{b}.csv")
}

/// scree.csv, loadings.csv and the three PC-pair score files for the training set.
pub fn write_pca_outputs(
    model: &PcaModel,
    train_norm: &Dataset,
    out: &mut OutputDir,
) -> Result<(), Error> {
    report::write_scree(model, &out.file("scree.csv"))?;
    report::write_loadings(model, &out.file("loadings.csv"))?;
    for (i, j) in SCORE_PAIRS {
        let table = model.project(train_norm, &[i, j])?;
        report::write_scores(&table, &out.file(&scores_file_name(i, j)))?;
    }
    Ok(())
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let pad = if hi > lo {
        GRID_PADDING * (hi - lo)
    } else {
        1.0
    };
    (lo - pad, hi + pad)
}

/// One decision grid per pair of `features` (canonical order within each
/// pair), each from a 2-feature LDA fit on the normalized training rows.
pub fn write_decision_grids(
    train_norm: &Dataset,
    features: &[FeatureId],
    out: &mut OutputDir,
) -> Result<(), Error> {
    let mut fs: Vec<FeatureId> = features.to_vec();
    fs.sort_unstable();
    let y = train_norm.labels()?;
    for (a_pos, &a) in fs.iter().enumerate() {
        for &b in &fs[a_pos + 1..] {
            let x = train_norm.feature_matrix(&[a.index(), b.index()]);
            let model = fit_lda(&x, &y)?;
            let xb = padded_range(x.iter().map(|r| r[0]));
            let yb = padded_range(x.iter().map(|r| r[1]));
            let grid = decision_grid(&model, xb, yb, (GRID_RESOLUTION, GRID_RESOLUTION))?;
            report::write_decision_grid(&grid, &out.file(&grid_file_name(a, b)))?;
        }
    }
    Ok(())
}

pub fn score_model(
    train_norm: &Dataset,
    test_norm: &Dataset,
    features: &[FeatureId],
) -> Result<ModelScore, Error> {
    let cols: Vec<usize> = features.iter().map(|f| f.index()).collect();
    let xtr = train_norm.feature_matrix(&cols);
    let ytr = train_norm.labels()?;
    let model = fit_lda(&xtr, &ytr)?;
    let train_accuracy = model.accuracy(&xtr, &ytr)?;
    let test_accuracy = model.accuracy(&test_norm.feature_matrix(&cols), &test_norm.labels()?)?;
    Ok(ModelScore {
        features: features.to_vec(),
        train_accuracy,
        test_accuracy,
    })
}

pub fn efs_on(train_norm: &Dataset, metric: Metric, cv_seed: u64) -> Result<EfsReport, Error> {
    let all: Vec<usize> = (0..N_FEATURES).collect();
    run_efs(
        &train_norm.feature_matrix(&all),
        &train_norm.labels()?,
        metric,
        cv_seed,
        Schedule::Parallel,
    )
}

fn features_of(subset: &[usize]) -> Vec<FeatureId> {
    subset
        .iter()
        .filter_map(|&i| FeatureId::from_index(i))
        .collect()
}

pub fn summarize_efs(report: &EfsReport) -> EfsSummary {
    let best = |r: &crate::efs::SubsetResult| BestSubset {
        size: r.size,
        features: features_of(&r.subset),
        metric: r.metric_value,
    };
    EfsSummary {
        metric: report.overall_best.metric,
        subsets_evaluated: report.all_results.len(),
        fit_failures: report.all_results.iter().filter(|r| r.fit_failed).count(),
        best_per_size: report.best_per_size.values().map(best).collect(),
        overall_best: best(&report.overall_best),
    }
}

pub fn summarize_pca(model: &PcaModel) -> Result<PcaSummary, Error> {
    Ok(PcaSummary {
        eigenvalues: model.eigenvalues.clone(),
        explained_variance_ratio: model.explained_variance_ratio.clone(),
        cumulative_ratio: model.cumulative_ratio.clone(),
        top_features: model.top_features(SELECTED_FEATURES)?,
        pc1_abs_loadings: FeatureId::ALL
            .iter()
            .map(|f| (*f, model.loadings[f.index()][0].abs()))
            .collect(),
    })
}

/// Generates (or reads) loads and labels; the returned dataset is `dataset.csv`.
pub fn labeled_dataset(cfg: &RunConfig) -> Result<Dataset, PipelineError> {
    let library = load_library(cfg.constants_path.as_deref()).stage("generate")?;
    let raw = generate_dataset(&library, &cfg.sampler).stage("generate")?;
    let with_loads = match &cfg.ingest_loads {
        Some(path) => ingest_external_loads(&raw, path).stage("ingest")?,
        None => simulate_dataset(&raw, &cfg.surrogate).stage("simulate")?,
    };
    label_dataset(&with_loads, &cfg.thresholds).stage("label")
}

pub fn run_all(cfg: &RunConfig) -> Result<RunSummary, PipelineError> {
    let mut out = OutputDir::create(&cfg.out_dir).stage("write")?;
    match run_into(cfg, &mut out) {
        Ok(summary) => Ok(summary),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

fn run_into(cfg: &RunConfig, out: &mut OutputDir) -> Result<RunSummary, PipelineError> {
    cfg.surrogate.validate().stage("simulate")?;
    cfg.thresholds.validate().stage("label")?;
    cfg.split.validate().stage("split")?;

    let dataset = labeled_dataset(cfg)?;
    write_dataset(&dataset, &out.file("dataset.csv")).stage("write")?;

    let parts = split(&dataset, &cfg.split).stage("split")?;
    write_dataset(&parts.train, &out.file("train.csv")).stage("write")?;
    write_dataset(&parts.test, &out.file("test.csv")).stage("write")?;

    let source = if cfg.normalize_on_all {
        &dataset
    } else {
        &parts.train
    };
    let (_, train_norm, test_norm) =
        normalize(source, &parts.train, &parts.test).stage("normalize")?;

    let pca = fit_pca(&train_norm).stage("pca")?;
    write_pca_outputs(&pca, &train_norm, out).stage("pca")?;
    let pca_summary = summarize_pca(&pca).stage("pca")?;

    let efs = efs_on(&train_norm, cfg.efs_metric, cfg.cv_seed).stage("efs")?;
    report::write_efs(&efs, &out.file("efs_accuracy.csv")).stage("efs")?;
    let efs_summary = summarize_efs(&efs);

    let pca_features = pca_summary.top_features.clone();
    write_decision_grids(&train_norm, &pca_features, out).stage("train")?;
    let pca_selected = score_model(&train_norm, &test_norm, &pca_features).stage("train")?;
    let efs_features = features_of(&efs.best_per_size[&SELECTED_FEATURES].subset);
    let efs_selected = score_model(&train_norm, &test_norm, &efs_features).stage("train")?;

    let counts = Counts {
        dataset: ClassCounts::of(&dataset),
        train: ClassCounts::of(&parts.train),
        test: ClassCounts::of(&parts.test),
    };
    let baseline = Baseline {
        test_majority_share: counts.test.majority_share(),
        train_majority_share: counts.train.majority_share(),
    };
    let summary_path = out.file("summary.json");
    let summary = RunSummary {
        config: cfg.clone(),
        counts,
        pca: pca_summary,
        efs: efs_summary,
        pca_selected,
        efs_selected,
        baseline,
        files: out.names(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(Error::from)
        .stage("write")?;
    fs::write(&summary_path, json + "\n")
        .map_err(|e| Error::io(&summary_path, e))
        .stage("write")?;
    Ok(summary)
}

/// Reads a labeled dataset, for subcommands.
pub fn read_labeled(path: &Path) -> Result<Dataset, Error> {
    let d = read_dataset(path)?;
    d.labels()?;
    Ok(d)
}
