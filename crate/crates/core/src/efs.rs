//! Exhaustive wrapper feature selection with an LDA classifier.
//!
//! Every non-empty subset of the feature columns is scored. Enumeration order
//! is by size, then lexicographic on ascending column indices; the report is
//! assembled in that order whatever the evaluation schedule. "Best" means the
//! highest metric, ties going to the earlier subset in enumeration order
//! (smaller first, then lexicographic).

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lda::fit_lda;
use crate::preprocess::ClassLabel;
use crate::rng::RandomStream;

/// Subsets with size in `min_size..=max_size`, each as ascending column indices.
pub fn enumerate_subsets(p: usize, min_size: usize, max_size: usize) -> Result<Vec<Vec<usize>>> {
    if !(1 <= min_size && min_size <= max_size && max_size <= p) {
        return Err(Error::InvalidArgument(format!(
            "subset sizes {min_size}..={max_size} invalid for {p} features"
        )));
    }
    let mut out = Vec::new();
    for size in min_size..=max_size {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            out.push(combo.clone());
            // advance to the next combination in lexicographic order
            let Some(i) = (0..size).rev().find(|&i| combo[i] < p - size + i) else {
                break;
            };
            combo[i] += 1;
            for j in i + 1..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Metric {
    /// Accuracy of the model on the rows it was fit on.
    #[default]
    TrainAccuracy,
    /// Pooled accuracy over k shuffled folds.
    KFold { k: usize },
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::TrainAccuracy => f.write_str("train"),
            Metric::KFold { k } => write!(f, "cv{k}"),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Metric::TrainAccuracy),
            _ => s
                .strip_prefix("cv")
                .and_then(|k| k.parse().ok())
                .filter(|&k: &usize| k >= 2)
                .map(|k| Metric::KFold { k })
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("unknown metric `{s}` (train, cv5, ...)"))
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetResult {
    /// Ascending column indices.
    pub subset: Vec<usize>,
    pub size: usize,
    pub metric_value: f64,
    pub metric: Metric,
    /// Set when an LDA fit failed; the metric is then 0.
    pub fit_failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfsReport {
    pub all_results: Vec<SubsetResult>,
    pub best_per_size: BTreeMap<usize, SubsetResult>,
    pub overall_best: SubsetResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Sequential,
    Parallel,
}

fn select_columns(x: &[Vec<f64>], columns: &[usize]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|r| columns.iter().map(|&c| r[c]).collect())
        .collect()
}

fn train_accuracy(x: &[Vec<f64>], y: &[ClassLabel]) -> Result<f64> {
    fit_lda(x, y)?.accuracy(x, y)
}

/// Fold assignment: one shuffled permutation of row indices from stream
/// `(seed, 0)`, cut into `k` contiguous chunks whose sizes differ by at most
/// one (the first `n % k` chunks are one larger).
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "cannot cut {n} rows into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    RandomStream::new(seed, 0).shuffle(&mut order);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

fn kfold_accuracy(x: &[Vec<f64>], y: &[ClassLabel], folds: &[Vec<usize>]) -> Result<f64> {
    let mut in_fold = vec![usize::MAX; x.len()];
    for (f, rows) in folds.iter().enumerate() {
        for &i in rows {
            in_fold[i] = f;
        }
    }
    let mut correct = 0usize;
    for (f, held_out) in folds.iter().enumerate() {
        let (tx, ty): (Vec<Vec<f64>>, Vec<ClassLabel>) = (0..x.len())
            .filter(|&i| in_fold[i] != f)
            .map(|i| (x[i].clone(), y[i]))
            .unzip();
        let model = fit_lda(&tx, &ty)?;
        for &i in held_out {
            if model.predict(&x[i])? == y[i] {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / x.len() as f64)
}

/// Scores one column subset.
pub fn evaluate_subset(
    x: &[Vec<f64>],
    y: &[ClassLabel],
    subset: &[usize],
    metric: Metric,
    folds: Option<&[Vec<usize>]>,
) -> SubsetResult {
    let xs = select_columns(x, subset);
    let value = match (metric, folds) {
        (Metric::TrainAccuracy, _) => train_accuracy(&xs, y),
        (Metric::KFold { .. }, Some(folds)) => kfold_accuracy(&xs, y, folds),
        (Metric::KFold { .. }, None) => {
            Err(Error::InvalidArgument("k-fold metric without folds".into()))
        }
    };
    let (metric_value, fit_failed) = match value {
        Ok(v) => (v, false),
        Err(_) => (0.0, true),
    };
    SubsetResult {
        subset: subset.to_vec(),
        size: subset.len(),
        metric_value,
        metric,
        fit_failed,
    }
}

fn first_best<'a>(results: impl Iterator<Item = &'a SubsetResult>) -> Option<&'a SubsetResult> {
    results.fold(None, |best: Option<&SubsetResult>, r| match best {
        Some(b) if b.metric_value >= r.metric_value => Some(b),
        _ => Some(r),
    })
}

pub fn run_efs(
    x: &[Vec<f64>],
    y: &[ClassLabel],
    metric: Metric,
    cv_seed: u64,
    schedule: Schedule,
) -> Result<EfsReport> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows and {} labels",
            x.len(),
            y.len()
        )));
    }
    let p = x[0].len();
    let mut distinct = y.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidArgument(
            "feature selection needs at least 2 classes".into(),
        ));
    }
    let folds = match metric {
        Metric::TrainAccuracy => None,
        Metric::KFold { k } => Some(kfold_indices(x.len(), k, cv_seed)?),
    };
    let subsets = enumerate_subsets(p, 1, p)?;
    let eval = |s: &Vec<usize>| evaluate_subset(x, y, s, metric, folds.as_deref());
    let all_results: Vec<SubsetResult> = match schedule {
        Schedule::Sequential => subsets.iter().map(eval).collect(),
        Schedule::Parallel => subsets.par_iter().map(eval).collect(),
    };
    let best_per_size: BTreeMap<usize, SubsetResult> = (1..=p)
        .map(|size| {
            let best = first_best(all_results.iter().filter(|r| r.size == size)).unwrap();
            (size, best.clone())
        })
        .collect();
    let overall_best = first_best(all_results.iter()).unwrap().clone();
    Ok(EfsReport {
        all_results,
        best_per_size,
        overall_best,
    })
}
