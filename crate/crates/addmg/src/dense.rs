//! Small dense symmetric systems: the Gram matrices of the
//! multipreconditioned solver and their pseudoinverse solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_DROP_TOL: f64 = 1e-12;

/// Small dense symmetric matrix, row-major.
#[derive(Debug, Clone)]
pub struct DenseSpd {
    dim: usize,
    values: Vec<f64>,
}

impl DenseSpd {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() != dim * dim {
            return Err(Error::InvalidArgument(format!(
                "DenseSpd: dim {dim} with {} values",
                values.len()
            )));
        }
        let m = DenseSpd { dim, values };
        let scale = m.values.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (m.get(i, j) - m.get(j, i)).abs() > 1e-12 * scale {
                    return Err(Error::InvalidMatrix("DenseSpd: not symmetric".into()));
                }
            }
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                values[i * dim + j] = f(i, j);
            }
        }
        DenseSpd::new(dim, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dim + j]
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.values)
    }
}

/// Result of a Gram solve: minimum-norm solution plus a flag raised when
/// the pseudoinverse path dropped at least one eigenvalue.
#[derive(Debug, Clone)]
pub struct GramSolution {
    pub alpha: Vec<f64>,
    pub rank_deficient: bool,
}

/// Cached symmetric eigendecomposition of a Gram matrix; reused for every
/// projection against a stored direction block.
#[derive(Debug, Clone)]
pub struct GramFactor {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl GramFactor {
    pub fn new(g: &DenseSpd) -> Self {
        let eig = g.to_dmatrix().symmetric_eigen();
        GramFactor {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(f64::INFINITY, |a, &v| a.min(v))
    }

    /// Minimum-norm solve via the eigendecomposition; eigenvalues at or
    /// below `drop_tol * lambda_max` are treated as zero.
    pub fn solve(&self, rhs: &[f64], drop_tol: f64) -> Result<GramSolution> {
        if rhs.len() != self.dim() {
            return Err(Error::DimensionMismatch("gram_solve: rhs length".into()));
        }
        let lambda_max = self.max_eigenvalue().max(0.0);
        let cutoff = drop_tol * lambda_max;
        let r = DVector::from_column_slice(rhs);
        let mut coeffs = self.eigenvectors.transpose() * r;
        let mut rank_deficient = false;
        for (k, c) in coeffs.iter_mut().enumerate() {
            let lambda = self.eigenvalues[k];
            if lambda <= cutoff {
                *c = 0.0;
                rank_deficient = true;
            } else {
                *c /= lambda;
            }
        }
        let alpha = &self.eigenvectors * coeffs;
        Ok(GramSolution {
            alpha: alpha.iter().copied().collect(),
            rank_deficient,
        })
    }
}

/// Minimum-norm solution of `G * alpha = rhs` by symmetric
/// eigendecomposition with a relative drop tolerance.
pub fn gram_solve(g: &DenseSpd, rhs: &[f64], drop_tol: f64) -> Result<GramSolution> {
    if drop_tol < 0.0 {
        return Err(Error::InvalidArgument("gram_solve: drop_tol < 0".into()));
    }
    GramFactor::new(g).solve(rhs, drop_tol)
}
