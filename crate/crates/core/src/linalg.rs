//! Small dense linear algebra: sample mean/covariance and a cyclic Jacobi
//! eigensolver for symmetric matrices.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Sweep limit for [`sym_eigen`].
pub const MAX_SWEEPS: usize = 100;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch { expected: c, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.max_asymmetry() == 0.0
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Sample mean and unbiased covariance `1/(k-1) Σ (x_i - m)(x_i - m)ᵀ`.
///
/// Only the upper triangle is accumulated and then mirrored, so the result is
/// exactly symmetric.
pub fn mean_covariance<T: AsRef<[f64]>>(points: &[T]) -> Result<(Vec<f64>, Matrix)> {
    let k = points.len();
    if k < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: k });
    }
    let n = points[0].as_ref().len();
    for p in points {
        if p.as_ref().len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.as_ref().len() });
        }
    }

    let mut mean = vec![0.0; n];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= k as f64;
    }

    let mut cov = Matrix::zeros(n, n);
    let mut dev = vec![0.0; n];
    for p in points {
        for ((d, v), m) in dev.iter_mut().zip(p.as_ref()).zip(&mean) {
            *d = v - m;
        }
        for i in 0..n {
            for j in i..n {
                cov[(i, j)] += dev[i] * dev[j];
            }
        }
    }
    let scale = 1.0 / (k as f64 - 1.0);
    for i in 0..n {
        for j in i..n {
            let v = cov[(i, j)] * scale;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok((mean, cov))
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi eigensolver.
///
/// Converges when the off-diagonal Frobenius norm drops below
/// `1e-12 * (1 + |A|_F)`. Eigenvalues are returned in descending order (stable
/// with respect to the Jacobi diagonal order on ties), and each eigenvector's
/// first component with magnitude above `1e-12` is made positive.
pub fn sym_eigen(a: &Matrix) -> Result<SymEigen> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: a.cols() });
    }
    let n = a.rows();
    let norm = a.frobenius_norm();
    let asym = a.max_asymmetry();
    if asym > 1e-10 * (1.0 + norm) || asym.is_nan() {
        return Err(Error::NotSymmetric(asym));
    }

    let mut m = a.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let mut v = Matrix::identity(n);
    let tol = 1e-12 * (1.0 + norm);

    let mut sweep = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off < tol {
            break;
        }
        if !off.is_finite() || sweep == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        sweep += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));

    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let flip = (0..n)
            .map(|r| v[(r, src)])
            .find(|c| c.abs() > 1e-12)
            .is_some_and(|c| c < 0.0);
        for r in 0..n {
            vectors[(r, dst)] = if flip { -v[(r, src)] } else { v[(r, src)] };
        }
    }
    Ok(SymEigen { values, vectors })
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation `A <- PᵀAP` zeroing `a_pq`, accumulated into `V <- VP`.
fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + theta.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let n = m.rows();
    for k in 0..n {
        let (akp, akq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = c * akp - s * akq;
        m[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let (apk, aqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = c * apk - s * aqk;
        m[(q, k)] = s * apk + c * aqk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
