//! Load labeling, train/test split and z-score normalization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureVector, N_FEATURES};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Low,
    Medium,
    High,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Low, ClassLabel::Medium, ClassLabel::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Low => "low",
            ClassLabel::Medium => "medium",
            ClassLabel::High => "high",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(ClassLabel::Low),
            "medium" => Ok(ClassLabel::Medium),
            "high" => Ok(ClassLabel::High),
            other => Err(Error::InvalidArgument(format!(
                "unknown class label `{other}`"
            ))),
        }
    }
}

/// Load thresholds in kWh/m2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low_max: f64,
    pub high_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            low_max: 75.0,
            high_min: 90.0,
        }
    }
}

impl Thresholds {
    pub fn new(low_max: f64, high_min: f64) -> Result<Self> {
        let t = Thresholds { low_max, high_min };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low_max < self.high_min)
            || !self.low_max.is_finite()
            || !self.high_min.is_finite()
        {
            return Err(Error::InvalidArgument(format!(
                "thresholds need low_max < high_min, got {} and {}",
                self.low_max, self.high_min
            )));
        }
        Ok(())
    }
}

/// High at or above `high_min`, Low at or below `low_max`, Medium between.
pub fn label_load(load: f64, t: &Thresholds) -> ClassLabel {
    if load >= t.high_min {
        ClassLabel::High
    } else if load <= t.low_max {
        ClassLabel::Low
    } else {
        ClassLabel::Medium
    }
}

pub fn label_dataset(dataset: &Dataset, t: &Thresholds) -> Result<Dataset> {
    t.validate()?;
    let mut out = dataset.clone();
    for (i, row) in out.rows.iter_mut().enumerate() {
        let load = row
            .load
            .ok_or_else(|| Error::InvalidArgument(format!("row {i} has no load to label")))?;
        row.label = Some(label_load(load, t));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.35,
            seed: crate::sampling::DEFAULT_SEED,
            stratified: true,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// A partition of a dataset; index lists are ascending original row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Dataset,
    pub test: Dataset,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Per-class train counts by largest remainder: floors of `n_k * fraction`,
/// then the leftover of `round(n * fraction)` goes to the largest fractional
/// parts, ties to the lower class.
fn stratified_quotas(counts: &[usize; 3], fraction: f64) -> [usize; 3] {
    let n: usize = counts.iter().sum();
    let total = (n as f64 * fraction).round() as usize;
    let exact = counts.map(|c| c as f64 * fraction);
    let mut quotas = exact.map(|q| q.floor() as usize);
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..3).filter(|&k| counts[k] > 0).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - quotas[a] as f64;
        let rb = exact[b] - quotas[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        quotas[k] += 1;
    }
    quotas
}

/// Stratified (default) or plain shuffled split. Every row must be labeled.
///
/// A single stream `(seed, 0)` drives the shuffles; with stratification each
/// class's row indices are shuffled in turn, Low, Medium, High.
pub fn split(dataset: &Dataset, cfg: &SplitConfig) -> Result<Split> {
    cfg.validate()?;
    let labels = dataset.labels()?;
    let n = dataset.len();
    let mut stream = RandomStream::new(cfg.seed, 0);
    let mut train_rows = Vec::new();
    if cfg.stratified {
        let counts = dataset.class_counts();
        let quotas = stratified_quotas(&counts, cfg.train_fraction);
        for class in ClassLabel::ALL {
            let k = class.index();
            if counts[k] == 0 {
                continue;
            }
            if quotas[k] == 0 {
                return Err(Error::InvalidArgument(format!(
                    "stratified split leaves class {class} ({} rows) with no training rows",
                    counts[k]
                )));
            }
            let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
            stream.shuffle(&mut members);
            train_rows.extend_from_slice(&members[..quotas[k]]);
        }
    } else {
        let total = (n as f64 * cfg.train_fraction).round() as usize;
        let mut all: Vec<usize> = (0..n).collect();
        stream.shuffle(&mut all);
        train_rows.extend_from_slice(&all[..total]);
    }
    train_rows.sort_unstable();
    let mut in_train = vec![false; n];
    for &i in &train_rows {
        in_train[i] = true;
    }
    let test_rows: Vec<usize> = (0..n).filter(|&i| !in_train[i]).collect();
    Ok(Split {
        train: dataset.select(&train_rows),
        test: dataset.select(&test_rows),
        train_rows,
        test_rows,
    })
}

/// Per-feature z-score. Uses the population standard deviation (divide by
/// n); a constant feature has std 0 and maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: FeatureVector,
    pub std_dev: FeatureVector,
}

impl Normalizer {
    pub fn transform(&self, features: &FeatureVector) -> FeatureVector {
        let mut out = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            out[j] = if self.std_dev[j] > 0.0 {
                (features[j] - self.mean[j]) / self.std_dev[j]
            } else {
                0.0
            };
        }
        out
    }
}

pub fn fit_normalizer(train: &Dataset) -> Result<Normalizer> {
    if train.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot fit a normalizer on an empty dataset".into(),
        ));
    }
    let n = train.len() as f64;
    let mut mean = [0.0; N_FEATURES];
    for row in &train.rows {
        for (m, v) in mean.iter_mut().zip(&row.features) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = [0.0; N_FEATURES];
    for row in &train.rows {
        for j in 0..N_FEATURES {
            let d = row.features[j] - mean[j];
            var[j] += d * d;
        }
    }
    Ok(Normalizer {
        mean,
        std_dev: var.map(|v| (v / n).sqrt()),
    })
}

pub fn apply_normalizer(norm: &Normalizer, dataset: &Dataset) -> Dataset {
    let mut out = dataset.clone();
    for row in out.rows.iter_mut() {
        row.features = norm.transform(&row.features);
    }
    out
}
