//! Additive multigrid as a multipreconditioner.
//!
//! This crate assembles diffusion problems on structured grids, builds
//! geometric or aggregation-based multilevel hierarchies, and solves the
//! resulting SPD systems with three related methods:
//!
//! * `addmg-mpcg` — multipreconditioned CG that takes the per-level
//!   additive multigrid corrections as simultaneous search directions and
//!   weights them by an energy-minimizing Gram solve each iteration,
//! * `addmg-pcg` — CG preconditioned by the equal-weight additive sum of
//!   the same corrections,
//! * `multmg-pcg` — CG preconditioned by a multiplicative V-cycle over the
//!   same hierarchy.
//!
//! The per-level corrections are independent of each other, so the
//! direction-block construction is data-parallel; with the `parallel`
//! feature (default) it can run on rayon via
//! [`preconditioners::AdditiveMg::set_parallel`].

pub mod dense;
pub mod error;
pub mod fem;
pub mod hierarchy;
pub mod krylov;
pub mod mm;
pub mod preconditioners;
pub mod smoothers;
pub mod sparse;

pub use dense::{gram_solve, DenseSpd, GramFactor, GramSolution};
pub use error::{Error, Result};
pub use fem::{
    assemble, element_stiffness, rasterize_fractures, BoundarySpec, DiffusionField, EdgeCondition,
    FractureNetwork, StructuredGrid,
};
pub use hierarchy::{
    bilinear_prolongation, build_aggregation_hierarchy, build_geometric_hierarchy, Level,
    LevelHierarchy,
};
pub use krylov::{mpcg, pcg, BlockPreconditioner, MpcgHistory, SolveReport, SolverConfig};
pub use preconditioners::{AdditiveMg, VCycle};
pub use smoothers::{CoarseSolver, SsorSmoother};
pub use sparse::{galerkin_triple_product, CsrMatrix, DirectionBlock};
