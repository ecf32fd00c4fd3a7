//! CSR sparse matrix kernels and small vector helpers.
//!
//! Everything here is plain `f64`; matrices are immutable after
//! construction and safe to share across threads.

use crate::error::{Error, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Compressed sparse row matrix.
///
/// Within each row the column indices are strictly increasing. The
/// `symmetric` flag is advisory and set by constructors that guarantee it
/// (Galerkin products, symmetric assembly).
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    /// Builds a CSR matrix from (row, col, value) triplets. Duplicate
    /// entries are summed; explicit zeros are kept out of the structure.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidMatrix(format!(
                    "triplet ({i},{j}) out of bounds for {nrows}x{ncols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());

        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_offsets[i + 1] += 1;
                col_indices.push(j);
                values.push(v);
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        })
    }

    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != nrows + 1
            || row_offsets[0] != 0
            || *row_offsets.last().unwrap() != values.len()
            || col_indices.len() != values.len()
        {
            return Err(Error::InvalidMatrix("inconsistent CSR arrays".into()));
        }
        for i in 0..nrows {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(Error::InvalidMatrix("row_offsets not non-decreasing".into()));
            }
            let row = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidMatrix(format!(
                        "row {i} column indices not strictly increasing"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last >= ncols {
                    return Err(Error::InvalidMatrix(format!("row {i} column out of range")));
                }
            }
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    pub fn set_symmetric_flag(&mut self, flag: bool) {
        self.symmetric = flag;
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_offsets[i];
        let hi = self.row_offsets[i + 1];
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter_triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Checks the stored-entry symmetry invariant against a relative tolerance.
    pub fn symmetric_to(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        self.iter_triplets()
            .all(|(i, j, v)| (v - self.get(j, i)).abs() <= tol * 1.0f64.max(v.abs()))
    }

    fn spmv_row(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        let mut acc = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            acc += v * x[j];
        }
        acc
    }

    /// Sparse matrix-vector product, row by row in stored order.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "spmv: matrix is {}x{}, vector has length {}",
                self.nrows,
                self.ncols,
                x.len()
            )));
        }
        Ok((0..self.nrows).map(|i| self.spmv_row(i, x)).collect())
    }

    /// Row-parallel spmv. Bitwise identical to `spmv` since per-row
    /// accumulation order is unchanged.
    #[cfg(feature = "parallel")]
    pub fn spmv_par(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch(format!(
                "spmv: matrix is {}x{}, vector has length {}",
                self.nrows,
                self.ncols,
                x.len()
            )));
        }
        Ok((0..self.nrows)
            .into_par_iter()
            .map(|i| self.spmv_row(i, x))
            .collect())
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut row_offsets = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            row_offsets[j + 1] += 1;
        }
        for j in 0..self.ncols {
            row_offsets[j + 1] += row_offsets[j];
        }
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut cursor = row_offsets.clone();
        for (i, j, v) in self.iter_triplets() {
            let pos = cursor[j];
            col_indices[pos] = i;
            values[pos] = v;
            cursor[j] += 1;
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets,
            col_indices,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Sparse matrix product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut row_offsets = vec![0usize; self.nrows + 1];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        // dense scatter workspace, one pass per row
        let mut marker = vec![usize::MAX; other.ncols];
        let mut accum = vec![0.0f64; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            let (cols_a, vals_a) = self.row(i);
            for (&k, &va) in cols_a.iter().zip(vals_a) {
                let (cols_b, vals_b) = other.row(k);
                for (&j, &vb) in cols_b.iter().zip(vals_b) {
                    if marker[j] != i {
                        marker[j] = i;
                        accum[j] = 0.0;
                        touched.push(j);
                    }
                    accum[j] += va * vb;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_indices.push(j);
                values.push(accum[j]);
            }
            row_offsets[i + 1] = col_indices.len();
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: other.ncols,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
        })
    }

    /// Dense copy, for small oracles and the coarse factorization.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter_triplets() {
            m[(i, j)] += v;
        }
        m
    }
}

/// Galerkin triple product `R * A * P`, with `R = P^T` required. The result
/// carries the symmetric flag.
pub fn galerkin_triple_product(r: &CsrMatrix, a: &CsrMatrix, p: &CsrMatrix) -> Result<CsrMatrix> {
    if r.ncols() != a.nrows() || a.ncols() != p.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "galerkin: R {}x{}, A {}x{}, P {}x{}",
            r.nrows(),
            r.ncols(),
            a.nrows(),
            a.ncols(),
            p.nrows(),
            p.ncols()
        )));
    }
    let pt = p.transpose();
    if r.nrows() != pt.nrows() || r.nnz() != pt.nnz() {
        return Err(Error::InvalidMatrix("galerkin: R != P^T".into()));
    }
    for ((i, j, v), (it, jt, vt)) in r.iter_triplets().zip(pt.iter_triplets()) {
        if i != it || j != jt || (v - vt).abs() > 1e-12 * 1.0f64.max(v.abs()) {
            return Err(Error::InvalidMatrix("galerkin: R != P^T".into()));
        }
    }
    let ap = a.matmul(p)?;
    let mut rap = r.matmul(&ap)?;
    rap.set_symmetric_flag(true);
    Ok(rap)
}

/// Block of search-direction columns (the `n x (L+1)` matrices of the
/// multipreconditioned solver), coarsest level first.
#[derive(Debug, Clone)]
pub struct DirectionBlock {
    nrows: usize,
    columns: Vec<Vec<f64>>,
}

impl DirectionBlock {
    pub fn new(nrows: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidArgument("direction block needs >= 1 column".into()));
        }
        for c in &columns {
            if c.len() != nrows {
                return Err(Error::DimensionMismatch(
                    "direction block column length mismatch".into(),
                ));
            }
        }
        Ok(DirectionBlock { nrows, columns })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column_mut(&mut self, k: usize) -> &mut Vec<f64> {
        &mut self.columns[k]
    }

    /// `self * alpha` for a coefficient vector with one entry per column.
    pub fn combine(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.ncols() {
            return Err(Error::DimensionMismatch("combine: coefficient count".into()));
        }
        let mut out = vec![0.0; self.nrows];
        for (c, &a) in self.columns.iter().zip(alpha) {
            axpy(a, c, &mut out);
        }
        Ok(out)
    }

    /// Sum of all columns (equal weights).
    pub fn row_sum(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for c in &self.columns {
            axpy(1.0, c, &mut out);
        }
        out
    }

    /// `A * self`, column by column.
    pub fn apply_matrix(&self, a: &CsrMatrix) -> Result<DirectionBlock> {
        let columns = self
            .columns
            .iter()
            .map(|c| a.spmv(c))
            .collect::<Result<Vec<_>>>()?;
        DirectionBlock::new(a.nrows(), columns)
    }

    /// `self^T * v`, one dot product per column.
    pub fn transpose_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.nrows {
            return Err(Error::DimensionMismatch("transpose_apply: vector length".into()));
        }
        Ok(self.columns.iter().map(|c| dot(c, v)).collect())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}
