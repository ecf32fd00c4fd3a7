//! Preconditioning actions over a level hierarchy: the additive direction
//! block, the classical additive sum, and the multiplicative V-cycle.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hierarchy::LevelHierarchy;
use crate::smoothers::{CoarseSolver, SsorSmoother};
use crate::sparse::{axpy, DirectionBlock};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Additive multigrid: independent per-level corrections from the same
/// fine residual, exposed either as separate columns or as their sum.
pub struct AdditiveMg {
    hierarchy: Arc<LevelHierarchy>,
    smoothers: Vec<SsorSmoother>, // levels 1..=L
    coarse: CoarseSolver,
    parallel: bool,
}

impl AdditiveMg {
    pub fn new(hierarchy: Arc<LevelHierarchy>, omega: f64, nu: usize) -> Result<Self> {
        let smoothers = hierarchy.levels[1..]
            .iter()
            .map(|l| SsorSmoother::new(l.a.clone(), omega, nu))
            .collect::<Result<Vec<_>>>()?;
        let coarse = CoarseSolver::new(&hierarchy.coarsest().a)?;
        Ok(AdditiveMg { hierarchy, smoothers, coarse, parallel: false })
    }

    /// Opt-in concurrent per-level column computation. The result is
    /// deterministic either way; columns share no state.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel;
    }

    pub fn hierarchy(&self) -> &LevelHierarchy {
        &self.hierarchy
    }

    pub fn n(&self) -> usize {
        self.hierarchy.finest().n()
    }

    pub fn n_columns(&self) -> usize {
        self.hierarchy.n_levels()
    }

    fn column(&self, level: usize, r: &[f64]) -> Result<Vec<f64>> {
        let l = &self.hierarchy.levels[level];
        let restricted = l.r_from_fine.spmv(r)?;
        let corrected = if level == 0 {
            self.coarse.solve(&restricted)?
        } else {
            self.smoothers[level - 1].apply(&restricted)?
        };
        l.p_to_fine.spmv(&corrected)
    }

    /// One column per level, coarsest first: `P_l * S_l(R_l r)`.
    pub fn additive_block(&self, r: &[f64]) -> Result<DirectionBlock> {
        if r.len() != self.n() {
            return Err(Error::DimensionMismatch("additive_block: residual length".into()));
        }
        #[cfg(feature = "parallel")]
        let columns = if self.parallel {
            (0..self.n_columns())
                .into_par_iter()
                .map(|l| self.column(l, r))
                .collect::<Result<Vec<_>>>()?
        } else {
            (0..self.n_columns())
                .map(|l| self.column(l, r))
                .collect::<Result<Vec<_>>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let columns = (0..self.n_columns())
            .map(|l| self.column(l, r))
            .collect::<Result<Vec<_>>>()?;
        DirectionBlock::new(self.n(), columns)
    }

    /// Equal-weight sum of all level corrections (classical additive MG).
    pub fn additive_apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(self.additive_block(r)?.row_sum())
    }
}

/// Multiplicative V-cycle over the same hierarchy, with SSOR pre- and
/// post-smoothing and an exact coarsest solve.
pub struct VCycle {
    hierarchy: Arc<LevelHierarchy>,
    smoothers: Vec<SsorSmoother>, // levels 1..=L
    coarse: CoarseSolver,
    nu_pre: usize,
    nu_post: usize,
}

impl VCycle {
    pub fn new(
        hierarchy: Arc<LevelHierarchy>,
        omega: f64,
        nu_pre: usize,
        nu_post: usize,
    ) -> Result<Self> {
        if nu_pre == 0 && nu_post == 0 {
            return Err(Error::InvalidArgument("V-cycle needs some smoothing".into()));
        }
        let smoothers = hierarchy.levels[1..]
            .iter()
            .map(|l| SsorSmoother::new(l.a.clone(), omega, nu_pre.max(nu_post)))
            .collect::<Result<Vec<_>>>()?;
        let coarse = CoarseSolver::new(&hierarchy.coarsest().a)?;
        Ok(VCycle { hierarchy, smoothers, coarse, nu_pre, nu_post })
    }

    fn cycle(&self, level: usize, rhs: &[f64]) -> Result<Vec<f64>> {
        if level == 0 {
            return self.coarse.solve(rhs);
        }
        let l = &self.hierarchy.levels[level];
        let smoother = &self.smoothers[level - 1];
        let zero = vec![0.0; rhs.len()];

        let mut x = smoother.apply_n(rhs, &zero, self.nu_pre)?;

        let ax = l.a.spmv(&x)?;
        let residual: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let p = &self.hierarchy.consecutive[level - 1];
        let coarse_rhs = p.transpose().spmv(&residual)?;
        let coarse_corr = self.cycle(level - 1, &coarse_rhs)?;
        axpy(1.0, &p.spmv(&coarse_corr)?, &mut x);

        smoother.apply_n(rhs, &x, self.nu_post)
    }

    /// V(nu_pre, nu_post) cycle from a zero initial guess; linear and
    /// symmetric in `r`.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let finest = self.hierarchy.n_levels() - 1;
        if r.len() != self.hierarchy.finest().n() {
            return Err(Error::DimensionMismatch("vcycle_apply: residual length".into()));
        }
        self.cycle(finest, r)
    }
}
