//! Multi-class linear discriminant analysis with a shared (pooled) covariance.
//!
//! For class k with mean `mu_k` and prior `pi_k = n_k / n`:
//!
//! ```text
//! delta_k(x) = x' S^-1 mu_k - mu_k' S^-1 mu_k / 2 + ln(pi_k)
//! ```
//!
//! where `S` is the pooled within-class covariance scaled by 1/(n - K). The
//! prediction is the first class (Low < Medium < High) attaining the maximum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{Cholesky, SymMatrix};
use crate::preprocess::ClassLabel;

/// Ridge values tried in turn when the pooled covariance is not numerically
/// positive definite.
pub const RIDGE_LADDER: [f64; 4] = [0.0, 1e-8, 1e-6, 1e-4];

#[derive(Debug, Clone)]
pub struct LdaModel {
    classes: Vec<ClassLabel>,
    means: Vec<Vec<f64>>,
    priors: Vec<f64>,
    log_priors: Vec<f64>,
    pooled_cov: SymMatrix,
    factor: Cholesky,
    /// `S^-1 mu_k` per class.
    coef: Vec<Vec<f64>>,
    intercept: Vec<f64>,
}

pub fn fit_lda(x: &[Vec<f64>], y: &[ClassLabel]) -> Result<LdaModel> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::Lda(format!("{n} rows but {} labels", y.len())));
    }
    if n == 0 {
        return Err(Error::Lda("no training rows".into()));
    }
    let p = x[0].len();
    if p == 0 || x.iter().any(|r| r.len() != p) {
        return Err(Error::Lda(
            "rows must share a non-zero feature count".into(),
        ));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Lda("non-finite feature value".into()));
    }

    let mut classes: Vec<ClassLabel> = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let k = classes.len();
    if k < 2 {
        return Err(Error::Lda(format!("need at least 2 classes, found {k}")));
    }
    let slot = |label: ClassLabel| classes.binary_search(&label).unwrap();

    let mut counts = vec![0usize; k];
    let mut means = vec![vec![0.0; p]; k];
    for (row, &label) in x.iter().zip(y) {
        let c = slot(label);
        counts[c] += 1;
        for (m, v) in means[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    if let Some(c) = counts.iter().position(|&c| c < 2) {
        return Err(Error::Lda(format!(
            "class {} has {} row(s); at least 2 are required",
            classes[c], counts[c]
        )));
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= c as f64);
    }

    let mut scatter = vec![0.0; p * p];
    for (row, &label) in x.iter().zip(y) {
        let mu = &means[slot(label)];
        for i in 0..p {
            let di = row[i] - mu[i];
            for j in i..p {
                scatter[i * p + j] += di * (row[j] - mu[j]);
            }
        }
    }
    let dof = (n - k) as f64;
    let pooled_cov = SymMatrix::from_fn(p, |i, j| scatter[i * p + j] / dof);
    if !(pooled_cov.trace() > 0.0) {
        return Err(Error::Lda("pooled within-class covariance is zero".into()));
    }

    let mut factor = None;
    let mut last_err = None;
    for ridge in RIDGE_LADDER {
        match Cholesky::factor(&pooled_cov, ridge) {
            Ok(f) => {
                factor = Some(f);
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let factor = match factor {
        Some(f) => f,
        None => {
            return Err(Error::Lda(format!(
                "pooled covariance singular even with ridge {}: {}",
                RIDGE_LADDER[RIDGE_LADDER.len() - 1],
                last_err.unwrap()
            )))
        }
    };

    let priors: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let log_priors: Vec<f64> = priors.iter().map(|p| p.ln()).collect();
    let coef: Vec<Vec<f64>> = means
        .iter()
        .map(|m| factor.solve(m))
        .collect::<Result<_>>()?;
    let intercept = means
        .iter()
        .zip(&coef)
        .zip(&log_priors)
        .map(|((m, w), lp)| -0.5 * dot(m, w) + lp)
        .collect();

    Ok(LdaModel {
        classes,
        means,
        priors,
        log_priors,
        pooled_cov,
        factor,
        coef,
        intercept,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LdaModel {
    pub fn classes(&self) -> &[ClassLabel] {
        &self.classes
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn log_priors(&self) -> &[f64] {
        &self.log_priors
    }

    pub fn pooled_covariance(&self) -> &SymMatrix {
        &self.pooled_cov
    }

    /// Ridge that made the pooled covariance factorizable.
    pub fn ridge(&self) -> f64 {
        self.factor.ridge
    }

    pub fn n_features(&self) -> usize {
        self.pooled_cov.dim()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::Lda(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    /// Discriminant value per class, in [`Self::classes`] order.
    pub fn discriminants(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self
            .coef
            .iter()
            .zip(&self.intercept)
            .map(|(w, b)| dot(x, w) + b)
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        let d = self.discriminants(x)?;
        let mut best = 0;
        for (k, v) in d.iter().enumerate().skip(1) {
            if *v > d[best] {
                best = k;
            }
        }
        Ok(self.classes[best])
    }

    pub fn predict_all(&self, x: &[Vec<f64>]) -> Result<Vec<ClassLabel>> {
        x.iter().map(|r| self.predict(r)).collect()
    }

    /// Fraction of rows whose prediction equals the label.
    pub fn accuracy(&self, x: &[Vec<f64>], y: &[ClassLabel]) -> Result<f64> {
        if x.is_empty() {
            return Err(Error::Lda("accuracy of an empty dataset".into()));
        }
        if x.len() != y.len() {
            return Err(Error::Lda(format!(
                "{} rows but {} labels",
                x.len(),
                y.len()
            )));
        }
        let mut correct = 0usize;
        for (row, label) in x.iter().zip(y) {
            if self.predict(row)? == *label {
                correct += 1;
            }
        }
        Ok(correct as f64 / x.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `labels[j][i]` is the prediction at `(xs[i], ys[j])`.
    pub labels: Vec<Vec<ClassLabel>>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Predictions of a 2-feature model on an inclusive `nx` by `ny` lattice.
pub fn decision_grid(
    model: &LdaModel,
    x_bounds: (f64, f64),
    y_bounds: (f64, f64),
    resolution: (usize, usize),
) -> Result<DecisionGrid> {
    if model.n_features() != 2 {
        return Err(Error::Lda(format!(
            "decision grid needs a 2-feature model, got {}",
            model.n_features()
        )));
    }
    let (nx, ny) = resolution;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(
            "grid resolution must be >= 2 per axis".into(),
        ));
    }
    for (lo, hi) in [x_bounds, y_bounds] {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "invalid grid bounds ({lo}, {hi})"
            )));
        }
    }
    let xs = linspace(x_bounds.0, x_bounds.1, nx);
    let ys = linspace(y_bounds.0, y_bounds.1, ny);
    let labels = ys
        .iter()
        .map(|&y| {
            xs.iter()
                .map(|&x| model.predict(&[x, y]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(DecisionGrid { xs, ys, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::*;

    fn col(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn one_dimensional_hand_example() {
        let x = col(&[-2.0, 0.0, 0.0, 2.0]);
        let y = [Low, Low, High, High];
        let m = fit_lda(&x, &y).unwrap();
        assert_eq!(m.means(), &[vec![-1.0], vec![1.0]]);
        // ((1 + 1) + (1 + 1)) / (4 - 2)
        assert_eq!(m.pooled_covariance().get(0, 0), 2.0);
        assert_eq!(m.ridge(), 0.0);
        assert!((m.priors().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_rows_rescale_covariance() {
        let x = vec![
            vec![0.0, 1.0],
            vec![1.0, 3.0],
            vec![2.0, 2.0],
            vec![5.0, 5.0],
            vec![6.0, 4.0],
            vec![7.5, 6.0],
        ];
        let y = [Low, Low, Low, High, High, High];
        let m1 = fit_lda(&x, &y).unwrap();
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<ClassLabel> = y.iter().chain(&y).copied().collect();
        let m2 = fit_lda(&x2, &y2).unwrap();
        assert_eq!(m1.means(), m2.means());
        let (n, k) = (6.0, 2.0);
        let scale = 2.0 * (n - k) / (2.0 * n - k);
        for i in 0..2 {
            for j in 0..2 {
                let a = m1.pooled_covariance().get(i, j) * scale;
                assert!((a - m2.pooled_covariance().get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fit_errors() {
        assert!(fit_lda(&col(&[1.0, 2.0, 3.0]), &[Low, Low, Low]).is_err());
        assert!(fit_lda(&col(&[1.0, 2.0, 3.0]), &[Low, Low, High]).is_err());
        assert!(fit_lda(&col(&[1.0, 1.0, 1.0, 1.0]), &[Low, Low, High, High]).is_err());
        assert!(fit_lda(&col(&[1.0, 2.0]), &[Low]).is_err());
        assert!(fit_lda(&col(&[1.0, f64::NAN, 0.0, 2.0]), &[Low, Low, High, High]).is_err());
    }

    #[test]
    fn symmetric_midpoint() {
        let x = col(&[-2.0, 0.0, 0.0, 2.0]);
        let m = fit_lda(&x, &[Low, Low, High, High]).unwrap();
        assert_eq!(m.predict(&[0.5]).unwrap(), High);
        assert_eq!(m.predict(&[-0.5]).unwrap(), Low);
        // exact tie at the boundary goes to the lower class
        assert_eq!(m.predict(&[0.0]).unwrap(), Low);
        assert!(m.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn unequal_priors_shift_boundary() {
        // 9:1 priors, means -1/+1, pooled variance 1.
        let mut v = Vec::new();
        let mut y = Vec::new();
        for _ in 0..9 {
            v.extend([-2.0, 0.0]);
            y.extend([Low, Low]);
        }
        v.extend([0.0, 2.0]);
        y.extend([High, High]);
        let x = col(&v);
        let m = fit_lda(&x, &y).unwrap();
        let var = m.pooled_covariance().get(0, 0);
        // Brute-force oracle: evaluate both discriminants directly on a grid.
        let delta = |x: f64, mu: f64, prior: f64| x * mu / var - mu * mu / (2.0 * var) + prior.ln();
        let mut boundary = None;
        for i in 0..=80_000 {
            let t = -4.0 + i as f64 * 1e-4;
            let hi = delta(t, 1.0, 0.1) > delta(t, -1.0, 0.9);
            assert_eq!(m.predict(&[t]).unwrap() == High, hi, "at {t}");
            if hi && boundary.is_none() {
                boundary = Some(t);
            }
        }
        let expected = var * 9f64.ln() / 2.0;
        assert!((boundary.unwrap() - expected).abs() < 2e-4);
    }

    #[test]
    fn grid_requires_two_features() {
        let m = fit_lda(&col(&[-2.0, 0.0, 0.0, 2.0]), &[Low, Low, High, High]).unwrap();
        assert!(decision_grid(&m, (0.0, 1.0), (0.0, 1.0), (3, 3)).is_err());
    }

    #[test]
    fn grid_shape_and_resolution_checks() {
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.5],
            vec![4.0, 4.0],
            vec![5.0, 3.0],
        ];
        let m = fit_lda(&x, &[Low, Low, High, High]).unwrap();
        let g = decision_grid(&m, (-1.0, 6.0), (-1.0, 6.0), (5, 4)).unwrap();
        assert_eq!(g.xs.len(), 5);
        assert_eq!(g.labels.len(), 4);
        assert_eq!(g.xs[4], 6.0);
        assert!(decision_grid(&m, (0.0, 1.0), (0.0, 1.0), (1, 4)).is_err());
        assert!(decision_grid(&m, (1.0, 1.0), (0.0, 1.0), (2, 4)).is_err());
    }
}
