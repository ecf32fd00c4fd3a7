//! Preconditioned CG and the multipreconditioned CG that takes the
//! additive multigrid corrections as simultaneous search directions.

use std::collections::VecDeque;
use std::time::Instant;

use crate::dense::{DenseSpd, GramFactor};
use crate::error::{Error, Result};
use crate::preconditioners::AdditiveMg;
use crate::sparse::{axpy, dot, norm2, CsrMatrix, DirectionBlock};

/// Anything that turns a residual into a block of search-direction columns.
pub trait BlockPreconditioner {
    fn block(&self, r: &[f64]) -> Result<DirectionBlock>;
}

impl BlockPreconditioner for AdditiveMg {
    fn block(&self, r: &[f64]) -> Result<DirectionBlock> {
        self.additive_block(r)
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative tolerance on `||r_k||_2 / ||b||_2`.
    pub tol_rel: f64,
    pub max_iters: usize,
    /// Number of previous direction blocks kept for re-conjugation.
    pub m: usize,
    /// Relative eigenvalue drop tolerance of the Gram pseudoinverse.
    pub gram_drop_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol_rel: 1e-8, max_iters: 2000, m: 5, gram_drop_tol: 1e-12 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tol_rel <= 0.0 {
            return Err(Error::InvalidArgument("tol_rel must be positive".into()));
        }
        if self.m == 0 {
            return Err(Error::InvalidArgument("m must be >= 1".into()));
        }
        if self.gram_drop_tol < 0.0 {
            return Err(Error::InvalidArgument("gram_drop_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// One row per iteration, one entry per level (coarsest first).
    /// Empty for single-preconditioner CG.
    pub alpha_history: Vec<Vec<f64>>,
    pub rank_deficiency_events: usize,
    pub wall_time: f64,
}

/// Stored direction block with its A-image and cached Gram factorization.
pub struct HistoryEntry {
    pub p: DirectionBlock,
    pub ap: DirectionBlock,
    pub gram_factor: GramFactor,
}

/// Ring buffer of the last `m` direction blocks.
pub struct MpcgHistory {
    capacity: usize,
    entries: VecDeque<HistoryEntry>,
}

impl MpcgHistory {
    pub fn new(capacity: usize) -> Self {
        MpcgHistory { capacity, entries: VecDeque::with_capacity(capacity) }
    }

    pub fn push(&mut self, entry: HistoryEntry) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &HistoryEntry> {
        self.entries.iter()
    }
}

/// Textbook preconditioned CG. The preconditioner must be a symmetric
/// positive semidefinite action.
pub fn pcg<P>(
    a: &CsrMatrix,
    b: &[f64],
    precond: P,
    cfg: &SolverConfig,
    x0: &[f64],
) -> Result<(Vec<f64>, SolveReport)>
where
    P: Fn(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    if b.len() != a.nrows() || x0.len() != a.ncols() {
        return Err(Error::DimensionMismatch("pcg: vector lengths".into()));
    }
    let start = Instant::now();
    let threshold = cfg.tol_rel * norm2(b);

    let mut x = x0.to_vec();
    let ax = a.spmv(&x)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut residual_history = vec![norm2(&r)];
    let mut converged = residual_history[0] <= threshold;
    let mut iterations = 0;

    if !converged {
        let mut z = precond(&r)?;
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < cfg.max_iters {
            let ap = a.spmv(&p)?;
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(Error::IndefiniteOperator(format!("p^T A p = {pap}")));
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            iterations += 1;
            let rnorm = norm2(&r);
            residual_history.push(rnorm);
            if rnorm <= threshold {
                converged = true;
                break;
            }
            z = precond(&r)?;
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for (pi, zi) in p.iter_mut().zip(&z) {
                *pi = zi + beta * *pi;
            }
        }
    }

    let report = SolveReport {
        converged,
        iterations,
        residual_history,
        alpha_history: Vec::new(),
        rank_deficiency_events: 0,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((x, report))
}

fn gram_matrix(p: &DirectionBlock, ap: &DirectionBlock) -> Result<DenseSpd> {
    let k = p.ncols();
    let mut values = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let g = dot(p.column(i), ap.column(j));
            values[i * k + j] = g;
            values[j * k + i] = g;
        }
    }
    DenseSpd::new(k, values)
}

/// Multipreconditioned CG with the per-level corrections of an additive
/// multigrid hierarchy (or any block preconditioner) as simultaneous
/// search directions, and an m-truncated conjugation window.
pub fn mpcg<B>(
    a: &CsrMatrix,
    b: &[f64],
    precond: &B,
    cfg: &SolverConfig,
    x0: &[f64],
) -> Result<(Vec<f64>, SolveReport)>
where
    B: BlockPreconditioner,
{
    cfg.validate()?;
    if b.len() != a.nrows() || x0.len() != a.ncols() {
        return Err(Error::DimensionMismatch("mpcg: vector lengths".into()));
    }
    let start = Instant::now();
    let threshold = cfg.tol_rel * norm2(b);

    let mut x = x0.to_vec();
    let ax = a.spmv(&x)?;
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut residual_history = vec![norm2(&r)];
    let mut alpha_history: Vec<Vec<f64>> = Vec::new();
    let mut rank_deficiency_events = 0usize;
    let mut converged = residual_history[0] <= threshold;
    let mut iterations = 0;

    let mut history = MpcgHistory::new(cfg.m);
    let mut p_block = precond.block(&r)?;

    while !converged && iterations < cfg.max_iters {
        let ap_block = p_block.apply_matrix(a)?;
        let gram = gram_matrix(&p_block, &ap_block)?;
        let factor = GramFactor::new(&gram);
        let lambda_max = factor.max_eigenvalue().max(0.0);
        if factor.min_eigenvalue() < -cfg.gram_drop_tol * lambda_max {
            return Err(Error::IndefiniteOperator(format!(
                "Gram matrix has eigenvalue {} (max {})",
                factor.min_eigenvalue(),
                lambda_max
            )));
        }

        let rhs = p_block.transpose_apply(&r)?;
        let solution = factor.solve(&rhs, cfg.gram_drop_tol)?;
        if solution.rank_deficient {
            rank_deficiency_events += 1;
        }
        let alpha = solution.alpha;

        axpy(1.0, &p_block.combine(&alpha)?, &mut x);
        axpy(-1.0, &ap_block.combine(&alpha)?, &mut r);
        alpha_history.push(alpha);
        iterations += 1;

        let rnorm = norm2(&r);
        residual_history.push(rnorm);
        if rnorm <= threshold {
            converged = true;
            break;
        }

        history.push(HistoryEntry { p: p_block, ap: ap_block, gram_factor: factor });

        // new directions, A-conjugated against the stored window
        let mut z_block = precond.block(&r)?;
        for entry in history.iter() {
            for c in 0..z_block.ncols() {
                let w = entry.ap.transpose_apply(z_block.column(c))?;
                let beta = entry.gram_factor.solve(&w, cfg.gram_drop_tol)?.alpha;
                let correction = entry.p.combine(&beta)?;
                axpy(-1.0, &correction, z_block.column_mut(c));
            }
        }
        p_block = z_block;
    }

    let report = SolveReport {
        converged,
        iterations,
        residual_history,
        alpha_history,
        rank_deficiency_events,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((x, report))
}

/// Largest cross-Gram entry of a candidate block against the stored window,
/// relative to each stored block's own Gram scale. Diagnostic for tests.
pub fn conjugacy_audit(history: &MpcgHistory, p_new: &DirectionBlock) -> Result<f64> {
    if history.is_empty() {
        return Err(Error::InvalidArgument("conjugacy_audit: empty history".into()));
    }
    let mut worst: f64 = 0.0;
    for entry in history.iter() {
        let own_scale = (0..entry.p.ncols())
            .flat_map(|i| {
                (0..entry.p.ncols()).map(move |j| dot(entry.p.column(i), entry.ap.column(j)).abs())
            })
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        for c in 0..p_new.ncols() {
            let cross = entry.ap.transpose_apply(p_new.column(c))?;
            for v in cross {
                worst = worst.max(v.abs() / own_scale);
            }
        }
    }
    Ok(worst)
}
