//! Experiment harness: configures the anisotropic-diffusion and
//! fracture-network problems, runs the solver variants, and writes CSV/JSON
//! artifacts for convergence curves and alpha heatmaps.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use addmg::error::{Error, Result};
use addmg::fem::{
    assemble, rasterize_fractures, BoundarySpec, DiffusionField, EdgeCondition, FractureNetwork,
    StructuredGrid,
};
use addmg::hierarchy::{
    build_aggregation_hierarchy, build_geometric_hierarchy, LevelHierarchy,
};
use addmg::krylov::{mpcg, pcg, SolveReport, SolverConfig};
use addmg::preconditioners::{AdditiveMg, VCycle};
use addmg::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Anisotropic,
    Fracture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolverKind {
    #[serde(rename = "addmg-mpcg")]
    AddMgMpcg,
    #[serde(rename = "addmg-pcg")]
    AddMgPcg,
    #[serde(rename = "multmg-pcg")]
    MultMgPcg,
    #[serde(rename = "cg")]
    Cg,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolverKind::AddMgMpcg => "addmg-mpcg",
            SolverKind::AddMgPcg => "addmg-pcg",
            SolverKind::MultMgPcg => "multmg-pcg",
            SolverKind::Cg => "cg",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "addmg-mpcg" => Ok(SolverKind::AddMgMpcg),
            "addmg-pcg" => Ok(SolverKind::AddMgPcg),
            "multmg-pcg" => Ok(SolverKind::MultMgPcg),
            "cg" => Ok(SolverKind::Cg),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyKind {
    Geometric,
    Aggregation,
}

fn default_one() -> f64 {
    1.0
}
fn default_nu() -> usize {
    6
}
fn default_m() -> usize {
    5
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    2000
}
fn default_gram_drop_tol() -> f64 {
    1e-12
}
fn default_strength_tol() -> f64 {
    0.25
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Full description of one experiment run; serializable so that the config
/// echo in the artifacts re-runs the experiment bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub solver: SolverKind,
    pub nx: usize,
    pub ny: usize,
    pub levels: usize,
    pub hierarchy: HierarchyKind,
    #[serde(default = "default_one")]
    pub kxx: f64,
    #[serde(default = "default_one")]
    pub kyy: f64,
    #[serde(default)]
    pub network_file: Option<PathBuf>,
    /// override the matrix permeability from the network file
    #[serde(default)]
    pub k_m: Option<f64>,
    /// override the fracture permeability from the network file
    #[serde(default)]
    pub k_f: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_nu")]
    pub nu: usize,
    #[serde(default = "default_one")]
    pub omega: f64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_tol")]
    pub tol_rel: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_gram_drop_tol")]
    pub gram_drop_tol: f64,
    #[serde(default = "default_strength_tol")]
    pub strength_tol: f64,
    #[serde(default)]
    pub parallel: bool,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Example 1 defaults: unit square, homogeneous Dirichlet, unit source,
    /// 4-level geometric hierarchy on a 160x160 mesh.
    pub fn example1(solver: SolverKind) -> Self {
        ExperimentConfig {
            problem: Problem::Anisotropic,
            solver,
            nx: 160,
            ny: 160,
            levels: 4,
            hierarchy: HierarchyKind::Geometric,
            kxx: 1.0,
            kyy: 1.0,
            network_file: None,
            k_m: None,
            k_f: None,
            delta: None,
            nu: 6,
            omega: 1.0,
            m: 5,
            tol_rel: 1e-8,
            max_iters: 2000,
            gram_drop_tol: 1e-12,
            strength_tol: 0.25,
            parallel: false,
            output_dir: default_out(),
        }
    }

    /// Example 2 defaults at desk scale: 200x200 grid, aggregation
    /// hierarchy, mixed Neumann/Dirichlet boundary. Three levels and
    /// nu = 4 (work parity with a V(2,2) cycle) keep iteration counts
    /// flat across the permeability range.
    pub fn example2(solver: SolverKind) -> Self {
        ExperimentConfig {
            problem: Problem::Fracture,
            solver,
            nx: 200,
            ny: 200,
            levels: 3,
            hierarchy: HierarchyKind::Aggregation,
            nu: 4,
            ..ExperimentConfig::example1(solver)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidArgument("nx and ny must be >= 1".into()));
        }
        if self.levels == 0 {
            return Err(Error::InvalidArgument("levels must be >= 1".into()));
        }
        if self.hierarchy == HierarchyKind::Geometric {
            let factor = 1usize << (self.levels - 1);
            if self.nx % factor != 0 || self.ny % factor != 0 {
                return Err(Error::InvalidArgument(format!(
                    "geometric hierarchy with {} levels needs nx and ny divisible by {factor} \
                     (got {}x{})",
                    self.levels, self.nx, self.ny
                )));
            }
        }
        if self.kxx <= 0.0
            || self.kyy <= 0.0
            || self.k_m.is_some_and(|v| v <= 0.0)
            || self.k_f.is_some_and(|v| v <= 0.0)
        {
            return Err(Error::InvalidArgument("diffusion coefficients must be positive".into()));
        }
        if self.tol_rel <= 0.0 || self.m == 0 || self.max_iters == 0 {
            return Err(Error::InvalidArgument("tol_rel > 0, m >= 1, max_iters >= 1".into()));
        }
        if !(0.0 < self.omega && self.omega < 2.0) {
            return Err(Error::InvalidArgument("omega must lie in (0,2)".into()));
        }
        if self.nu == 0 {
            return Err(Error::InvalidArgument("nu must be >= 1".into()));
        }
        if !(0.0 < self.strength_tol && self.strength_tol < 1.0) {
            return Err(Error::InvalidArgument("strength_tol must lie in (0,1)".into()));
        }
        if self.problem == Problem::Fracture && self.network_file.is_none() {
            return Err(Error::InvalidArgument(
                "fracture problem needs --network FILE".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            tol_rel: self.tol_rel,
            max_iters: self.max_iters,
            m: self.m,
            gram_drop_tol: self.gram_drop_tol,
        }
    }
}

/// Assembled system plus the pieces needed for post-processing.
pub struct AssembledProblem {
    pub grid: StructuredGrid,
    pub field: DiffusionField,
    pub a: CsrMatrix,
    pub b: Vec<f64>,
}

/// Example 2 boundary conditions: no-flux top/bottom, unit influx on the
/// left, unit pressure on the right.
pub fn fracture_boundary() -> BoundarySpec {
    BoundarySpec {
        left: EdgeCondition::Neumann(1.0),
        right: EdgeCondition::Dirichlet(1.0),
        bottom: EdgeCondition::Neumann(0.0),
        top: EdgeCondition::Neumann(0.0),
    }
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<AssembledProblem> {
    cfg.validate()?;
    let grid = StructuredGrid::new(cfg.nx, cfg.ny)?;
    match cfg.problem {
        Problem::Anisotropic => {
            let field = DiffusionField::constant(&grid, cfg.kxx, cfg.kyy)?;
            let bc = BoundarySpec::all_dirichlet(0.0);
            let source = vec![1.0; grid.n_elements()];
            let (a, b) = assemble(&grid, &field, &bc, &source)?;
            Ok(AssembledProblem { grid, field, a, b })
        }
        Problem::Fracture => {
            let path = cfg.network_file.as_ref().unwrap();
            let text = fs::read_to_string(path)?;
            let mut net = FractureNetwork::from_json(&text)?;
            // CLI overrides for the sweep parameters
            if let Some(v) = cfg.k_m {
                net.k_m = v;
            }
            if let Some(v) = cfg.k_f {
                net.k_f = v;
            }
            if let Some(d) = cfg.delta {
                net.delta = d;
            }
            net.validate()?;
            let field = rasterize_fractures(&grid, &net)?;
            let source = vec![0.0; grid.n_elements()];
            let (a, b) = assemble(&grid, &field, &fracture_boundary(), &source)?;
            Ok(AssembledProblem { grid, field, a, b })
        }
    }
}

pub fn build_hierarchy(cfg: &ExperimentConfig, problem: &AssembledProblem) -> Result<LevelHierarchy> {
    match cfg.hierarchy {
        HierarchyKind::Geometric => {
            build_geometric_hierarchy(&problem.grid, &problem.a, cfg.levels)
        }
        HierarchyKind::Aggregation => {
            build_aggregation_hierarchy(&problem.a, cfg.levels, cfg.strength_tol)
        }
    }
}

pub struct RunArtifact {
    pub config: ExperimentConfig,
    pub solution: Vec<f64>,
    pub report: SolveReport,
    pub n_levels: usize,
    pub convergence_csv: PathBuf,
    pub alpha_csv: Option<PathBuf>,
}

fn solve_assembled(
    cfg: &ExperimentConfig,
    problem: &AssembledProblem,
) -> Result<(Vec<f64>, SolveReport, usize)> {
    let x0 = vec![0.0; problem.a.nrows()];
    let scfg = cfg.solver_config();
    if cfg.solver == SolverKind::Cg {
        let (x, rep) = pcg(&problem.a, &problem.b, |r| Ok(r.to_vec()), &scfg, &x0)?;
        return Ok((x, rep, 1));
    }
    let hierarchy = Arc::new(build_hierarchy(cfg, problem)?);
    let n_levels = hierarchy.n_levels();
    let out = match cfg.solver {
        SolverKind::AddMgMpcg => {
            let mut addmg = AdditiveMg::new(hierarchy, cfg.omega, cfg.nu)?;
            addmg.set_parallel(cfg.parallel);
            mpcg(&problem.a, &problem.b, &addmg, &scfg, &x0)?
        }
        SolverKind::AddMgPcg => {
            let mut addmg = AdditiveMg::new(hierarchy, cfg.omega, cfg.nu)?;
            addmg.set_parallel(cfg.parallel);
            pcg(&problem.a, &problem.b, |r| addmg.additive_apply(r), &scfg, &x0)?
        }
        SolverKind::MultMgPcg => {
            // work parity: nu symmetric sweeps split between pre and post
            let half = (cfg.nu / 2).max(1);
            let v = VCycle::new(hierarchy, cfg.omega, half, half)?;
            pcg(&problem.a, &problem.b, |r| v.apply(r), &scfg, &x0)?
        }
        SolverKind::Cg => unreachable!(),
    };
    Ok((out.0, out.1, n_levels))
}

fn write_convergence_csv(path: &Path, report: &SolveReport) -> Result<()> {
    let mut text = String::from("iter,res_2norm\n");
    for (k, r) in report.residual_history.iter().enumerate() {
        text.push_str(&format!("{k},{r:.17e}\n"));
    }
    fs::write(path, text)?;
    Ok(())
}

/// Alpha heatmap data: one row per (iteration, level), level 0 = coarsest.
fn write_alpha_csv(path: &Path, report: &SolveReport) -> Result<()> {
    let mut text = String::from("iter,level,alpha_value\n");
    for (k, alphas) in report.alpha_history.iter().enumerate() {
        for (level, a) in alphas.iter().enumerate() {
            text.push_str(&format!("{k},{level},{a:.17e}\n"));
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn run_tag(cfg: &ExperimentConfig) -> String {
    match cfg.problem {
        Problem::Anisotropic => format!("anisotropic_kxx{:e}_{}", cfg.kxx, cfg.solver),
        Problem::Fracture => match cfg.k_f {
            Some(v) => format!("fracture_kf{v:e}_{}", cfg.solver),
            None => format!("fracture_{}", cfg.solver),
        },
    }
}

/// Runs one configured experiment and writes its artifacts.
pub fn run(cfg: &ExperimentConfig) -> Result<RunArtifact> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    let (solution, report, n_levels) = solve_assembled(cfg, &problem)?;

    fs::create_dir_all(&cfg.output_dir)?;
    let tag = run_tag(cfg);
    let convergence_csv = cfg.output_dir.join(format!("{tag}_convergence.csv"));
    write_convergence_csv(&convergence_csv, &report)?;

    let alpha_csv = if cfg.solver == SolverKind::AddMgMpcg {
        let p = cfg.output_dir.join(format!("{tag}_alpha.csv"));
        write_alpha_csv(&p, &report)?;
        Some(p)
    } else {
        None
    };

    let echo = serde_json::json!({
        "config": cfg,
        "converged": report.converged,
        "iterations": report.iterations,
        "final_rel_res": report.residual_history.last().unwrap()
            / report.residual_history[0].max(f64::MIN_POSITIVE),
        "rank_deficiency_events": report.rank_deficiency_events,
        "wall_time": report.wall_time,
        "n_levels": n_levels,
    });
    fs::write(
        cfg.output_dir.join(format!("{tag}_run.json")),
        serde_json::to_string_pretty(&echo).map_err(|e| Error::Parse(e.to_string()))?,
    )?;

    Ok(RunArtifact { config: cfg.clone(), solution, report, n_levels, convergence_csv, alpha_csv })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    Kxx,
    Kf,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kxx" => Ok(SweepParam::Kxx),
            "kf" => Ok(SweepParam::Kf),
            other => Err(Error::InvalidArgument(format!("unknown sweep parameter '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: f64,
    pub solver: SolverKind,
    pub iterations: usize,
    pub final_rel_res: f64,
    pub converged: bool,
}

/// Runs one solver list over a list of values of a single parameter and
/// writes the summary table.
pub fn sweep(
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    solvers: &[SolverKind],
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    if solvers.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one solver".into()));
    }
    let mut rows = Vec::new();
    for &value in values {
        for &solver in solvers {
            let mut cfg = base.clone();
            cfg.solver = solver;
            match param {
                SweepParam::Kxx => cfg.kxx = value,
                SweepParam::Kf => cfg.k_f = Some(value),
            }
            let artifact = run(&cfg)?;
            let rep = &artifact.report;
            rows.push(SweepRow {
                param: value,
                solver,
                iterations: rep.iterations,
                final_rel_res: rep.residual_history.last().unwrap()
                    / rep.residual_history[0].max(f64::MIN_POSITIVE),
                converged: rep.converged,
            });
        }
    }

    fs::create_dir_all(&base.output_dir)?;
    let mut text = String::from("param,solver,iters,final_rel_res\n");
    for row in &rows {
        text.push_str(&format!(
            "{:e},{},{},{:.17e}\n",
            row.param, row.solver, row.iterations, row.final_rel_res
        ));
    }
    fs::write(base.output_dir.join("sweep.csv"), text)?;
    Ok(rows)
}

/// Total conormal flux through the right (Dirichlet) boundary, by summing
/// the discrete residual of the unconstrained operator over that edge.
pub fn right_boundary_flux(problem: &AssembledProblem, x: &[f64]) -> Result<f64> {
    // re-assemble without elimination to recover boundary fluxes
    let grid = &problem.grid;
    let mut triplets = Vec::new();
    for ey in 0..grid.ny {
        for ex in 0..grid.nx {
            let e = ey * grid.nx + ex;
            let ke = addmg::fem::element_stiffness(
                problem.field.kxx[e],
                problem.field.kyy[e],
                grid.hx(),
                grid.hy(),
            )?;
            let nodes = grid.element_nodes(ex, ey);
            for a in 0..4 {
                for c in 0..4 {
                    triplets.push((nodes[a], nodes[c], ke[a][c]));
                }
            }
        }
    }
    let raw = CsrMatrix::from_triplets(grid.n_nodes(), grid.n_nodes(), &triplets)?;
    let ax = raw.spmv(x)?;
    Ok((0..=grid.ny).map(|j| ax[grid.node_index(grid.nx, j)]).sum())
}
