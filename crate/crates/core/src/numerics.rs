//! Small dense linear algebra: symmetric eigendecomposition (cyclic Jacobi)
//! and Cholesky solves. Sized for p <= a few dozen.

// Index loops mirror the textbook formulations.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Dense symmetric matrix stored as its packed upper triangle, so symmetry
/// holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    upper: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            upper: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Upper triangle of a row-major square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument("matrix is not square".into()));
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.dim - i * (i + 1) / 2 + j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.offset(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.offset(i, j);
        self.upper[k] = value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i][k]`: component `i` of the eigenvector paired with
    /// `eigenvalues[k]` (column-major pairing, row-major storage).
    pub eigenvectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.iter().map(|row| row[k]).collect()
    }
}

fn off_diagonal_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i][j] * a[i][j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi. Stops when the off-diagonal Frobenius norm drops below
/// `1e-12 * ||A||_F`. Eigenpairs are sorted by descending eigenvalue and each
/// eigenvector is signed so its largest-magnitude component (first one on
/// ties) is non-negative.
pub fn jacobi_eigen(a: &SymMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::InvalidArgument(
            "eigendecomposition of an empty matrix".into(),
        ));
    }
    let mut m = a.to_dense();
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let target = JACOBI_REL_TOL * a.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (mp, mq) = (row[p], row[q]);
                    row[p] = c * mp - s * mq;
                    row[q] = s * mp + c * mq;
                }
                for k in 0..n {
                    let (mp, mq) = (m[p][k], m[q][k]);
                    m[p][k] = c * mp - s * mq;
                    m[q][k] = s * mp + c * mq;
                }
                m[p][q] = 0.0;
                m[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[y][y].total_cmp(&m[x][x]).then(x.cmp(&y)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| m[k][k]).collect();
    let mut eigenvectors = vec![vec![0.0; n]; n];
    for (col, &k) in order.iter().enumerate() {
        let mut pivot = 0;
        for i in 1..n {
            if v[i][k].abs() > v[pivot][k].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot][k] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[i][col] = sign * v[i][k];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

/// Lower-triangular Cholesky factor of `A + ridge * I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
    pub ridge: f64,
}

impl Cholesky {
    /// Fails when a pivot is numerically non-positive (at or below
    /// `p * eps * max|diag|`).
    pub fn factor(a: &SymMatrix, ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ridge must be >= 0, got {ridge}"
            )));
        }
        let n = a.dim();
        let scale = (0..n)
            .map(|i| (a.get(i, i) + ridge).abs())
            .fold(0.0, f64::max);
        let floor = n as f64 * f64::EPSILON * scale;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.get(j, j) + ridge;
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Cholesky {
            dim: n,
            lower: l,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim;
        if b.len() != n {
            return Err(Error::InvalidArgument(format!(
                "right-hand side has length {}, expected {n}",
                b.len()
            )));
        }
        let l = &self.lower;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Ok(x)
    }
}

/// Solves `(A + ridge * I) x = b`.
pub fn spd_solve(a: &SymMatrix, b: &[f64], ridge: f64) -> Result<Vec<f64>> {
    Cholesky::factor(a, ridge)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_storage_is_symmetric() {
        let mut m = SymMatrix::zeros(4);
        m.set(3, 1, 2.5);
        assert_eq!(m.get(1, 3), 2.5);
        assert_eq!(m.get(3, 1), 2.5);
        let d = SymMatrix::from_fn(5, |i, j| (i * 10 + j) as f64).to_dense();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
    }

    #[test]
    fn identity_eigen() {
        let e = jacobi_eigen(&SymMatrix::identity(7)).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| l == 1.0));
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(e.eigenvectors[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn two_by_two() {
        let a = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = jacobi_eigen(&a).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0] - r).abs() < 1e-14 && (v0[1] - r).abs() < 1e-14);
        // Tie on magnitude: the first component carries the positive sign.
        assert!((v1[0] - r).abs() < 1e-14 && (v1[1] + r).abs() < 1e-14);
    }

    #[test]
    fn diagonal_is_sorted() {
        let a = SymMatrix::from_fn(3, |i, j| if i == j { [1.0, 5.0, 3.0][i] } else { 0.0 });
        let e = jacobi_eigen(&a).unwrap();
        assert_eq!(e.eigenvalues, vec![5.0, 3.0, 1.0]);
        assert_eq!(e.sweeps, 0);
    }

    #[test]
    fn zero_matrix() {
        let e = jacobi_eigen(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![0.0; 3]);
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = SymMatrix::identity(2);
        a.set(0, 1, f64::NAN);
        assert!(jacobi_eigen(&a).is_err());
        assert!(jacobi_eigen(&SymMatrix::zeros(0)).is_err());
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let b = [3.0, -1.0, 0.5];
        assert_eq!(
            spd_solve(&SymMatrix::identity(3), &b, 0.0).unwrap(),
            b.to_vec()
        );
        let a = SymMatrix::from_fn(2, |i, j| if i == j { [2.0, 4.0][i] } else { 0.0 });
        let x = spd_solve(&a, &[2.0, 8.0], 0.0).unwrap();
        assert!(
            (x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14,
            "{x:?}"
        );
    }

    #[test]
    fn singular_needs_ridge() {
        let a = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let err = spd_solve(&a, &[1.0, 1.0], 0.0).unwrap_err();
        assert!(err.to_string().contains("ridge"));
        let x = spd_solve(&a, &[1.0, 1.0], 1e-6).unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
        assert!(spd_solve(&SymMatrix::zeros(2), &[1.0, 1.0], 0.0).is_err());
        assert!(spd_solve(&a, &[1.0, 1.0], -1.0).is_err());
    }

    #[test]
    fn length_mismatch() {
        assert!(spd_solve(&SymMatrix::identity(3), &[1.0], 0.0).is_err());
    }
}
