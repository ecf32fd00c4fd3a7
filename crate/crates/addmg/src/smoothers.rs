//! Per-level SSOR smoothing and the exact coarse-level solve.

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Symmetric SOR smoother for one hierarchy level. `apply` runs `nu`
/// symmetric sweeps (forward then backward Gauss-Seidel with relaxation
/// `omega`) from a zero initial guess, which makes it a linear, symmetric
/// operator in the right-hand side.
#[derive(Debug, Clone)]
pub struct SsorSmoother {
    a: CsrMatrix,
    diag: Vec<f64>,
    omega: f64,
    nu: usize,
}

impl SsorSmoother {
    pub fn new(a: CsrMatrix, omega: f64, nu: usize) -> Result<Self> {
        if !(0.0 < omega && omega < 2.0) {
            return Err(Error::InvalidArgument(format!("omega {omega} outside (0,2)")));
        }
        if nu == 0 {
            return Err(Error::InvalidArgument("nu must be >= 1".into()));
        }
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch("SSOR needs a square matrix".into()));
        }
        let diag: Vec<f64> = (0..a.nrows()).map(|i| a.get(i, i)).collect();
        if let Some(i) = diag.iter().position(|&d| d == 0.0) {
            return Err(Error::ZeroDiagonal(i));
        }
        Ok(SsorSmoother { a, diag, omega, nu })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    fn sweep(&self, c: &mut [f64], rhs: &[f64], reverse: bool) {
        let n = self.a.nrows();
        let order: Box<dyn Iterator<Item = usize>> =
            if reverse { Box::new((0..n).rev()) } else { Box::new(0..n) };
        for i in order {
            let (cols, vals) = self.a.row(i);
            let mut sigma = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i {
                    sigma += v * c[j];
                }
            }
            c[i] += self.omega * ((rhs[i] - sigma) / self.diag[i] - c[i]);
        }
    }

    /// Runs the smoother from an explicit initial guess; one step is a
    /// forward plus a backward sweep.
    pub fn apply_from(&self, rhs: &[f64], c0: &[f64]) -> Result<Vec<f64>> {
        self.apply_n(rhs, c0, self.nu)
    }

    /// Like `apply_from` with an explicit step count.
    pub fn apply_n(&self, rhs: &[f64], c0: &[f64], steps: usize) -> Result<Vec<f64>> {
        if rhs.len() != self.n() || c0.len() != self.n() {
            return Err(Error::DimensionMismatch("ssor_apply: vector length".into()));
        }
        let mut c = c0.to_vec();
        for _ in 0..steps {
            self.sweep(&mut c, rhs, false);
            self.sweep(&mut c, rhs, true);
        }
        Ok(c)
    }

    /// The preconditioner action used inside the multigrid operators:
    /// `nu` symmetric sweeps from a zero initial guess.
    pub fn apply(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.apply_from(rhs, &vec![0.0; self.n()])
    }

    /// Evaluates both sides of the symmetry check
    /// `(u^T S v, v^T S u)`; callers assert the two agree.
    pub fn symmetry_check(&self, u: &[f64], v: &[f64]) -> Result<(f64, f64)> {
        let su = self.apply(u)?;
        let sv = self.apply(v)?;
        Ok((crate::sparse::dot(u, &sv), crate::sparse::dot(v, &su)))
    }
}

/// Exact coarse-level solve by dense Cholesky factorization.
pub struct CoarseSolver {
    factor: Cholesky<f64, Dyn>,
    n: usize,
}

impl std::fmt::Debug for CoarseSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CoarseSolver").field("n", &self.n).finish()
    }
}

impl CoarseSolver {
    pub fn new(a0: &CsrMatrix) -> Result<Self> {
        if a0.nrows() != a0.ncols() {
            return Err(Error::DimensionMismatch("coarse solver needs square matrix".into()));
        }
        let dense = a0.to_dense();
        let sym = (&dense + dense.transpose()) * 0.5;
        let factor = sym
            .cholesky()
            .ok_or_else(|| Error::IndefiniteOperator("coarse operator is not SPD".into()))?;
        Ok(CoarseSolver { factor, n: a0.nrows() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch("coarse solve: rhs length".into()));
        }
        let x = self.factor.solve(&DVector::from_column_slice(rhs));
        Ok(x.iter().copied().collect())
    }
}
