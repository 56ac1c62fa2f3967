//! PCA-projection: fit principal directions to a small set of points, project
//! each point onto the leading directions, and reconstruct it in the original
//! space.
//!
//! Applied to the better members of a population on a valley-shaped landscape,
//! the leading direction tracks the valley, so the reconstructed points are
//! pulled onto it.

use crate::error::{Error, Result};
use crate::linalg::{mean_covariance, sym_eigen, Matrix};

/// Default number of retained principal directions.
pub const DEFAULT_RETAINED: usize = 5;

/// Retained directions used when none are configured for a `dim`-dimensional problem.
pub fn default_retained(dim: usize) -> usize {
    DEFAULT_RETAINED.min(dim).max(1)
}

/// Mean plus the full eigenbasis of a point cloud's covariance, of which the
/// first `retained` directions are used for projection.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: Vec<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns aligned with `eigenvalues`.
    pub eigenvectors: Matrix,
    pub retained: usize,
}

impl PcaBasis {
    pub fn fit<T: AsRef<[f64]>>(points: &[T], retained: usize) -> Result<Self> {
        let (mean, cov) = mean_covariance(points)?;
        let n = mean.len();
        if retained == 0 || retained > n {
            return Err(Error::RetainedDims { retained, dim: n });
        }
        let eig = sym_eigen(&cov)?;
        Ok(Self { mean, eigenvalues: eig.values, eigenvectors: eig.vectors, retained })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Coordinates `y = Vᵀ (x - m)` along the retained directions.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..self.retained)
            .map(|j| (0..n).map(|r| self.eigenvectors[(r, j)] * (x[r] - self.mean[r])).sum())
            .collect()
    }

    /// `m + V y`.
    pub fn reconstruct(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|r| self.mean[r] + (0..self.retained).map(|j| self.eigenvectors[(r, j)] * y[j]).sum::<f64>())
            .collect()
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.reconstruct(&self.coordinates(x)))
    }

    /// Components of `x - m` along the discarded directions.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (self.retained..n)
            .map(|j| (0..n).map(|r| self.eigenvectors[(r, j)] * (x[r] - self.mean[r])).sum())
            .collect()
    }
}

/// Projects every point onto the first `retained` principal directions of the
/// set and reconstructs it. Output order matches input order.
pub fn pca_projection<T: AsRef<[f64]>>(points: &[T], retained: usize) -> Result<Vec<Vec<f64>>> {
    let basis = PcaBasis::fit(points, retained)?;
    points.iter().map(|p| basis.project(p.as_ref())).collect()
}
