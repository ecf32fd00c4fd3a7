use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use addmg_cli::{
    run, sweep, ExperimentConfig, HierarchyKind, Problem, SolverKind, SweepParam,
};

#[derive(Parser)]
#[command(name = "addmg", about = "Additive multigrid / MPCG experiment driver", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configured problem and write convergence/alpha artifacts.
    Solve(SolveArgs),
    /// Run one solver set over a list of parameter values.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON config file; flags given on the command line override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem family: anisotropic | fracture
    #[arg(long)]
    problem: Option<String>,
    /// Elements per side in x
    #[arg(long)]
    nx: Option<usize>,
    /// Elements per side in y (defaults to nx)
    #[arg(long)]
    ny: Option<usize>,
    /// Number of levels in the hierarchy
    #[arg(long)]
    levels: Option<usize>,
    /// Hierarchy construction: geometric | aggregation
    #[arg(long)]
    hierarchy: Option<String>,
    #[arg(long)]
    kxx: Option<f64>,
    #[arg(long)]
    kyy: Option<f64>,
    /// Fracture network JSON file
    #[arg(long)]
    network: Option<PathBuf>,
    /// Matrix permeability override
    #[arg(long)]
    km: Option<f64>,
    /// Fracture permeability override
    #[arg(long)]
    kf: Option<f64>,
    /// Fracture width override
    #[arg(long)]
    delta: Option<f64>,
    /// Smoothing steps per additive correction (V-cycle gets nu/2 + nu/2)
    #[arg(long)]
    nu: Option<usize>,
    /// SSOR relaxation factor
    #[arg(long)]
    omega: Option<f64>,
    /// Direction-block history window
    #[arg(long)]
    m: Option<usize>,
    /// Relative residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Strength threshold for aggregation coarsening
    #[arg(long)]
    strength_tol: Option<f64>,
    /// Evaluate level corrections in parallel
    #[arg(long)]
    parallel: bool,
    /// Output directory for CSV/JSON artifacts
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// addmg-mpcg | addmg-pcg | multmg-pcg | cg
    #[arg(long)]
    solver: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Swept parameter: kxx | kf
    #[arg(long)]
    param: String,
    /// Values of the swept parameter
    #[arg(long, num_args = 1.., value_delimiter = ' ')]
    values: Vec<f64>,
    /// Solvers to run for each value
    #[arg(long, num_args = 1.., value_delimiter = ' ', default_values_t =
        ["addmg-mpcg".to_string(), "addmg-pcg".to_string(), "multmg-pcg".to_string()])]
    solvers: Vec<String>,
}

fn parse_problem(s: &str) -> Result<Problem, String> {
    match s {
        "anisotropic" => Ok(Problem::Anisotropic),
        "fracture" => Ok(Problem::Fracture),
        other => Err(format!("unknown problem '{other}'")),
    }
}

fn parse_hierarchy(s: &str) -> Result<HierarchyKind, String> {
    match s {
        "geometric" => Ok(HierarchyKind::Geometric),
        "aggregation" => Ok(HierarchyKind::Aggregation),
        other => Err(format!("unknown hierarchy '{other}'")),
    }
}

/// Builds the effective config: start from the problem family's defaults (or
/// a JSON config file), then apply command-line overrides.
fn build_config(common: &CommonArgs, solver: Option<&str>) -> Result<ExperimentConfig, String> {
    let mut cfg = if let Some(path) = &common.config {
        ExperimentConfig::from_json_file(path).map_err(|e| e.to_string())?
    } else {
        let problem = parse_problem(common.problem.as_deref().unwrap_or("anisotropic"))?;
        match problem {
            Problem::Anisotropic => ExperimentConfig::example1(SolverKind::AddMgMpcg),
            Problem::Fracture => ExperimentConfig::example2(SolverKind::AddMgMpcg),
        }
    };
    if let Some(p) = &common.problem {
        cfg.problem = parse_problem(p)?;
    }
    if let Some(s) = solver {
        cfg.solver = s.parse().map_err(|e: addmg::error::Error| e.to_string())?;
    }
    if let Some(v) = common.nx {
        cfg.nx = v;
        cfg.ny = common.ny.unwrap_or(v);
    }
    if let Some(v) = common.ny {
        cfg.ny = v;
    }
    if let Some(v) = common.levels {
        cfg.levels = v;
    }
    if let Some(h) = &common.hierarchy {
        cfg.hierarchy = parse_hierarchy(h)?;
    }
    if let Some(v) = common.kxx {
        cfg.kxx = v;
    }
    if let Some(v) = common.kyy {
        cfg.kyy = v;
    }
    if let Some(p) = &common.network {
        cfg.network_file = Some(p.clone());
    }
    if common.km.is_some() {
        cfg.k_m = common.km;
    }
    if common.kf.is_some() {
        cfg.k_f = common.kf;
    }
    if common.delta.is_some() {
        cfg.delta = common.delta;
    }
    if let Some(v) = common.nu {
        cfg.nu = v;
    }
    if let Some(v) = common.omega {
        cfg.omega = v;
    }
    if let Some(v) = common.m {
        cfg.m = v;
    }
    if let Some(v) = common.tol {
        cfg.tol_rel = v;
    }
    if let Some(v) = common.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = common.strength_tol {
        cfg.strength_tol = v;
    }
    if common.parallel {
        cfg.parallel = true;
    }
    if let Some(p) = &common.out {
        cfg.output_dir = p.clone();
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

const EXIT_CONFIG_ERROR: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG_ERROR),
            };
        }
    };

    match cli.command {
        Command::Solve(args) => {
            let cfg = match build_config(&args.common, args.solver.as_deref()) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(EXIT_CONFIG_ERROR);
                }
            };
            match run(&cfg) {
                Ok(artifact) => {
                    let rep = &artifact.report;
                    println!(
                        "{} {} n={} levels={} iters={} converged={} rel_res={:.3e} wall={:.3}s",
                        match cfg.problem {
                            Problem::Anisotropic => "anisotropic",
                            Problem::Fracture => "fracture",
                        },
                        cfg.solver,
                        artifact.solution.len(),
                        artifact.n_levels,
                        rep.iterations,
                        rep.converged,
                        rep.residual_history.last().unwrap()
                            / rep.residual_history[0].max(f64::MIN_POSITIVE),
                        rep.wall_time,
                    );
                    println!("wrote {}", artifact.convergence_csv.display());
                    if let Some(p) = &artifact.alpha_csv {
                        println!("wrote {}", p.display());
                    }
                    if rep.converged {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("did not converge in {} iterations", cfg.max_iters);
                        ExitCode::from(EXIT_NOT_CONVERGED)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG_ERROR)
                }
            }
        }
        Command::Sweep(args) => {
            let outcome = (|| -> Result<_, String> {
                let base = build_config(&args.common, None)?;
                let param: SweepParam = args.param.parse().map_err(|e: addmg::error::Error| e.to_string())?;
                let solvers = args
                    .solvers
                    .iter()
                    .map(|s| s.parse::<SolverKind>().map_err(|e| e.to_string()))
                    .collect::<Result<Vec<_>, _>>()?;
                if args.values.is_empty() {
                    return Err("sweep needs at least one --values entry".into());
                }
                let rows = sweep(&base, param, &args.values, &solvers).map_err(|e| e.to_string())?;
                Ok((base, rows))
            })();
            match outcome {
                Ok((base, rows)) => {
                    println!("param,solver,iters,final_rel_res");
                    let mut all_converged = true;
                    for row in &rows {
                        println!(
                            "{:e},{},{},{:.3e}",
                            row.param, row.solver, row.iterations, row.final_rel_res
                        );
                        all_converged &= row.converged;
                    }
                    println!("wrote {}", base.output_dir.join("sweep.csv").display());
                    if all_converged {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("at least one run did not converge");
                        ExitCode::from(EXIT_NOT_CONVERGED)
                    }
                }
                Err(e) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(EXIT_CONFIG_ERROR)
                }
            }
        }
    }
}
