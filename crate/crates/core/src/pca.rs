//! Principal component analysis on normalized features.
//!
//! Covariance uses the unbiased 1/(n-1) scaling. Loadings are the raw
//! eigenvector components (unit columns, not scaled by sqrt(eigenvalue)),
//! signed by the eigensolver's convention.

use serde::Serialize;

use crate::dataset::{Dataset, FeatureId, N_FEATURES};
use crate::error::{Error, Result};
use crate::numerics::{jacobi_eigen, SymMatrix};
use crate::preprocess::ClassLabel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaModel {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub cumulative_ratio: Vec<f64>,
    /// `loadings[feature][pc]`, rows in input column order.
    pub loadings: Vec<Vec<f64>>,
    /// Column means of the fit data, subtracted before projecting.
    pub center: Vec<f64>,
    pub n_fit: usize,
}

/// Sample covariance (1/(n-1)) of row-major data.
pub fn covariance(x: &[Vec<f64>]) -> Result<(SymMatrix, Vec<f64>)> {
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    let p = x[0].len();
    if p == 0 || x.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidArgument(
            "rows must share a non-zero width".into(),
        ));
    }
    let mut mean = vec![0.0; p];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let cov = SymMatrix::from_fn(p, |i, j| {
        x.iter()
            .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
            .sum::<f64>()
            / (n - 1) as f64
    });
    Ok((cov, mean))
}

/// Fits on an arbitrary row-major matrix; [`fit_pca`] is the dataset entry point.
pub fn fit_pca_matrix(x: &[Vec<f64>]) -> Result<PcaModel> {
    let (cov, center) = covariance(x)?;
    let eig = jacobi_eigen(&cov)?;
    let total: f64 = eig.eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(
            "data has zero total variance".into(),
        ));
    }
    let explained_variance_ratio: Vec<f64> = eig.eigenvalues.iter().map(|l| l / total).collect();
    let cumulative_ratio = explained_variance_ratio
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();
    Ok(PcaModel {
        eigenvalues: eig.eigenvalues,
        explained_variance_ratio,
        cumulative_ratio,
        loadings: eig.eigenvectors,
        center,
        n_fit: x.len(),
    })
}

pub fn fit_pca(train_normalized: &Dataset) -> Result<PcaModel> {
    let all: Vec<usize> = (0..N_FEATURES).collect();
    fit_pca_matrix(&train_normalized.feature_matrix(&all))
}

/// Feature row order of loading reports.
pub const REPORT_ORDER: [FeatureId; N_FEATURES] = [
    FeatureId::Thickness,
    FeatureId::ThermalConductivity,
    FeatureId::SpecificHeatCapacity,
    FeatureId::Density,
    FeatureId::ThermalAbsorptance,
    FeatureId::SolarAbsorptance,
    FeatureId::VisualAbsorptance,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadingReport {
    pub features: Vec<FeatureId>,
    /// Absolute loadings, `values[row][pc]`.
    pub values: Vec<Vec<f64>>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Features ranked by |PC1 loading|, ties to canonical order.
    pub fn top_features(&self, k: usize) -> Result<Vec<FeatureId>> {
        if self.dim() != N_FEATURES || k == 0 || k > N_FEATURES {
            return Err(Error::InvalidArgument(format!(
                "top_features needs a {N_FEATURES}-feature model and 1 <= k <= {N_FEATURES}, got k = {k}"
            )));
        }
        let mut ranked = FeatureId::ALL.to_vec();
        ranked.sort_by(|a, b| {
            let la = self.loadings[a.index()][0].abs();
            let lb = self.loadings[b.index()][0].abs();
            lb.total_cmp(&la).then(a.cmp(b))
        });
        ranked.truncate(k);
        Ok(ranked)
    }

    pub fn loading_report(&self) -> Result<LoadingReport> {
        if self.dim() != N_FEATURES {
            return Err(Error::InvalidArgument(
                "loading report needs a 7-feature model".into(),
            ));
        }
        Ok(LoadingReport {
            features: REPORT_ORDER.to_vec(),
            values: REPORT_ORDER
                .iter()
                .map(|f| self.loadings[f.index()].iter().map(|v| v.abs()).collect())
                .collect(),
        })
    }

    /// Scores of `x` (centered by the fit means) on 1-based `components`.
    pub fn project_matrix(&self, x: &[Vec<f64>], components: &[usize]) -> Result<Vec<Vec<f64>>> {
        let p = self.dim();
        if let Some(&bad) = components.iter().find(|&&c| c == 0 || c > p) {
            return Err(Error::InvalidArgument(format!(
                "component {bad} outside 1..={p}"
            )));
        }
        if let Some(r) = x.iter().find(|r| r.len() != p) {
            return Err(Error::InvalidArgument(format!(
                "row has {} features, expected {p}",
                r.len()
            )));
        }
        Ok(x.iter()
            .map(|row| {
                components
                    .iter()
                    .map(|&c| {
                        (0..p)
                            .map(|i| (row[i] - self.center[i]) * self.loadings[i][c - 1])
                            .sum()
                    })
                    .collect()
            })
            .collect())
    }

    pub fn project(
        &self,
        dataset_normalized: &Dataset,
        components: &[usize],
    ) -> Result<ScoreTable> {
        let all: Vec<usize> = (0..N_FEATURES).collect();
        let scores = self.project_matrix(&dataset_normalized.feature_matrix(&all), components)?;
        Ok(ScoreTable {
            components: components.to_vec(),
            scores,
            labels: dataset_normalized.rows.iter().map(|r| r.label).collect(),
        })
    }

    /// Maps scores on all components back to (centered-then-restored) inputs.
    pub fn reconstruct(&self, scores: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let p = self.dim();
        scores
            .iter()
            .map(|s| {
                (0..p)
                    .map(|i| {
                        self.center[i] + (0..p).map(|c| self.loadings[i][c] * s[c]).sum::<f64>()
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    /// 1-based component indices.
    pub components: Vec<usize>,
    pub scores: Vec<Vec<f64>>,
    pub labels: Vec<Option<ClassLabel>>,
}
