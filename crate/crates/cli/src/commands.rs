//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Args;
use serde::Serialize;

use eigopt::applications::{
    gen_quadsys, gen_spd, pipeline, precondition as run_precondition, PipelineInit,
    PipelineMethod, PipelineOpts, PipelineResult, PrecondSet, SolverChoice,
};
use eigopt::constraints::convexity_sufficient;
use eigopt::error::{Error, Result};
use eigopt::solvers::{
    fw as run_fw, pgm as run_pgm, project_spectral, solve_linear as run_solve_linear, FwParams,
    LinearSolve, ObjectiveOracle, PgmParams, SolveReport, SolveStatus,
};
use eigopt::spectral::io::{read_matrix, read_sym_matrix, MatrixJson};
use eigopt::spectral::{SymMatrix, Tolerances};

use crate::config::{load_config, write_json, ConstraintArgs, PrecondConfig, QuadsysConfig};
use crate::{EXIT_INFEASIBLE, EXIT_UNBOUNDED};

#[derive(Args)]
pub struct SolveLinearArgs {
    /// Objective matrix C (CSV or JSON); any square matrix.
    #[arg(long)]
    pub c: PathBuf,
    #[command(flatten)]
    pub constraint: ConstraintArgs,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveLinearOutput {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_opt: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_opt: Option<MatrixJson>,
}

pub fn solve_linear(args: SolveLinearArgs) -> Result<ExitCode> {
    let c = read_matrix(&args.c)?;
    let ec = args.constraint.build(Some(c.nrows()))?;
    let (output, code) = match run_solve_linear(&c, &ec, None)? {
        LinearSolve::Optimal(sol) => (
            SolveLinearOutput {
                status: "optimal",
                value: Some(sol.value),
                lambda_opt: Some(sol.lambda_opt.iter().copied().collect()),
                x_opt: Some(MatrixJson::from_matrix(sol.x_opt.matrix())),
            },
            ExitCode::SUCCESS,
        ),
        LinearSolve::Unbounded => (
            SolveLinearOutput {
                status: "unbounded",
                value: None,
                lambda_opt: None,
                x_opt: None,
            },
            ExitCode::from(EXIT_UNBOUNDED),
        ),
        LinearSolve::Infeasible => (
            SolveLinearOutput {
                status: "infeasible",
                value: None,
                lambda_opt: None,
                x_opt: None,
            },
            ExitCode::from(EXIT_INFEASIBLE),
        ),
    };
    emit_json(args.out.as_deref(), &output)?;
    Ok(code)
}

#[derive(Args)]
pub struct ProjectArgs {
    /// Matrix to project (CSV or JSON); symmetrized internally.
    #[arg(long)]
    pub y: PathBuf,
    #[command(flatten)]
    pub constraint: ConstraintArgs,
    /// Projection accuracy budget.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Feasible-set diameter bound enabling the inexactness certificate.
    #[arg(long)]
    pub diam: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ProjectOutput {
    x_proj: MatrixJson,
    delta_cert: f64,
    certified: bool,
    lambda_proj: Vec<f64>,
}

pub fn project(args: ProjectArgs) -> Result<ExitCode> {
    let y = read_matrix(&args.y)?;
    let ec = args.constraint.build(Some(y.nrows()))?;
    let proj = eigopt::solvers::project_spectral_with(&y, &ec, args.tol, args.diam)?;
    emit_json(
        args.out.as_deref(),
        &ProjectOutput {
            x_proj: MatrixJson::from_matrix(proj.x_proj.matrix()),
            delta_cert: proj.delta_cert,
            certified: proj.certified,
            lambda_proj: proj.lambda_proj.iter().copied().collect(),
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Args)]
pub struct PgmArgs {
    /// Target matrix T of the objective 0.5*|X - T|_F^2 (CSV or JSON).
    #[arg(long)]
    pub target: PathBuf,
    /// Accept an asymmetric target by averaging it with its transpose.
    #[arg(long)]
    pub symmetrize: bool,
    /// Starting point (defaults to the projection of the zero matrix).
    #[arg(long)]
    pub x0: Option<PathBuf>,
    #[command(flatten)]
    pub constraint: ConstraintArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub h0: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    /// Output directory for trace.jsonl, summary.json, x_final.json.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

pub fn pgm(args: PgmArgs) -> Result<ExitCode> {
    let target = read_sym_matrix(&args.target, args.symmetrize, &Tolerances::default())?;
    let ec = args.constraint.build(Some(target.n()))?;
    let x0 = starting_point(args.x0.as_deref(), &ec, target.n())?;
    let mut params = PgmParams::new(args.eps);
    params.delta = args.delta;
    params.alpha = args.alpha;
    params.tau1 = args.tau1;
    params.h0 = args.h0;
    params.max_iter = args.max_iter;

    let oracle = ObjectiveOracle::half_sq_distance(&target);
    let report = run_pgm(&oracle, &ec, &x0, &params)?;
    let echo = serde_json::json!({
        "command": "pgm",
        "target": args.target,
        "eps": args.eps, "delta": args.delta, "alpha": args.alpha,
        "tau1": args.tau1, "h0": args.h0, "max_iter": args.max_iter,
        "constraint": ec,
    });
    write_run_outputs(&args.out_dir, &echo, &report)?;
    Ok(run_exit(&report.status, false))
}

#[derive(Args)]
pub struct FwArgs {
    /// Target matrix T of the objective 0.5*|X - T|_F^2 (CSV or JSON).
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub symmetrize: bool,
    /// Starting point (defaults to the projection of the zero matrix).
    #[arg(long)]
    pub x0: Option<PathBuf>,
    #[command(flatten)]
    pub constraint: ConstraintArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta0: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

pub fn fw(args: FwArgs) -> Result<ExitCode> {
    let target = read_sym_matrix(&args.target, args.symmetrize, &Tolerances::default())?;
    let ec = args.constraint.build(Some(target.n()))?;
    let x0 = starting_point(args.x0.as_deref(), &ec, target.n())?;
    let mut params = FwParams::new(args.eps);
    params.alpha = args.alpha;
    params.theta0 = args.theta0;
    params.max_iter = args.max_iter;

    let oracle = ObjectiveOracle::half_sq_distance(&target);
    let report = run_fw(&oracle, &ec, &x0, &params)?;
    let echo = serde_json::json!({
        "command": "fw",
        "target": args.target,
        "eps": args.eps, "alpha": args.alpha, "theta0": args.theta0,
        "max_iter": args.max_iter,
        "constraint": ec,
    });
    write_run_outputs(&args.out_dir, &echo, &report)?;
    Ok(run_exit(&report.status, false))
}

#[derive(Args)]
pub struct PrecondArgs {
    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Matrix dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed for the random positive semidefinite instance.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Constraint family: m1, m2, m3.
    #[arg(long)]
    pub set: Option<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long = "m3-rows")]
    pub m3_rows: Option<usize>,
    /// Solver: pgm or fw.
    #[arg(long)]
    pub alg: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

pub fn precondition(args: PrecondArgs) -> Result<ExitCode> {
    let file: PrecondConfig = load_config(args.config.as_deref())?;
    let n = args.n.or(file.n).unwrap_or(50);
    let seed = args
        .seed
        .or(file.seed)
        .ok_or_else(|| Error::InvalidParams("--seed is required (no wall-clock seeding)".into()))?;
    let set_name = args.set.or(file.set).unwrap_or_else(|| "m1".into());
    let set = match set_name.as_str() {
        "m1" => PrecondSet::M1,
        "m2" => PrecondSet::M2 {
            kappa: args.kappa.or(file.kappa).unwrap_or(1000.0),
        },
        "m3" => PrecondSet::M3 {
            m: args.m3_rows.or(file.m3_rows).unwrap_or(1),
        },
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown constraint set '{other}' (expected m1, m2 or m3)"
            )))
        }
    };
    let alg = args.alg.or(file.alg).unwrap_or_else(|| "pgm".into());
    let eps = args.eps.or(file.eps).unwrap_or(1e-10);
    let max_iter = args.max_iter.or(file.max_iter).unwrap_or(3000);

    let a = gen_spd(n, seed)?;
    let choice = match alg.as_str() {
        "pgm" => {
            let mut p = PgmParams::new(eps);
            p.max_iter = max_iter;
            SolverChoice::Pgm(p)
        }
        "fw" => {
            let mut p = FwParams::new(eps);
            p.max_iter = max_iter;
            SolverChoice::Fw(p)
        }
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown algorithm '{other}' (expected pgm or fw)"
            )))
        }
    };

    let report = run_precondition(&a, &set, choice)?;
    let echo = serde_json::json!({
        "experiment": "precondition",
        "n": n, "seed": seed, "set": set, "alg": alg,
        "eps": eps, "max_iter": max_iter,
    });
    write_run_outputs(&args.out_dir, &echo, &report)?;
    // a fixed-budget experiment completing at max_iter is a success
    Ok(run_exit(&report.status, true))
}

#[derive(Args)]
pub struct QuadsysArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Comma-separated seed list; each seed generates one instance.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// newton, convex-newton or sco-newton.
    #[arg(long)]
    pub method: Option<String>,
    /// random, near-solution or fixed-feasible.
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long = "pgm-eps")]
    pub pgm_eps: Option<f64>,
    #[arg(long = "pgm-max-iter")]
    pub pgm_max_iter: Option<usize>,
    #[arg(long = "newton-max-iter")]
    pub newton_max_iter: Option<usize>,
    /// Worker threads for seed-parallel runs.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

pub fn quadsys(args: QuadsysArgs) -> Result<ExitCode> {
    let file: QuadsysConfig = load_config(args.config.as_deref())?;
    let n = args.n.or(file.n).unwrap_or(20);
    let m = args.m.or(file.m).unwrap_or(n);
    let seeds = args
        .seeds
        .or(file.seeds)
        .ok_or_else(|| Error::InvalidParams("--seeds is required (no wall-clock seeding)".into()))?;
    let method_name = args.method.or(file.method).unwrap_or_else(|| "sco-newton".into());
    let method = match method_name.as_str() {
        "newton" => PipelineMethod::Newton,
        "convex-newton" => PipelineMethod::ConvexNewton,
        "sco-newton" => PipelineMethod::ScoNewton,
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown method '{other}' (expected newton, convex-newton or sco-newton)"
            )))
        }
    };
    let init_name = args.init.or(file.init).unwrap_or_else(|| "near-solution".into());
    let eta = args.eta.or(file.eta).unwrap_or(0.4);
    let init = match init_name.as_str() {
        "random" => PipelineInit::Random,
        "near-solution" => PipelineInit::NearSolution { eta },
        "fixed-feasible" => PipelineInit::FixedFeasible,
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown init '{other}' (expected random, near-solution or fixed-feasible)"
            )))
        }
    };

    let mut opts = PipelineOpts::default();
    if let Some(d) = args.delta.or(file.delta) {
        opts.delta = d;
    }
    if let Some(e) = args.pgm_eps.or(file.pgm_eps) {
        opts.pgm.eps = e;
    }
    if let Some(it) = args.pgm_max_iter.or(file.pgm_max_iter) {
        opts.pgm.max_iter = it;
    }
    if let Some(it) = args.newton_max_iter.or(file.newton_max_iter) {
        opts.newton_max_iter = it;
    }
    let jobs = args.jobs.or(file.jobs).unwrap_or(1).max(1);

    let results = run_seeds(n, m, &seeds, method, init, &opts, jobs)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let echo = serde_json::json!({
        "experiment": "quadsys",
        "n": n, "m": m, "seeds": seeds, "method": method_name,
        "init": init_name, "eta": eta, "delta": opts.delta,
        "pgm_eps": opts.pgm.eps, "pgm_max_iter": opts.pgm.max_iter,
        "newton_max_iter": opts.newton_max_iter, "jobs": jobs,
    });
    write_json(&args.out_dir.join("config.json"), &echo)?;
    write_json(&args.out_dir.join("results.json"), &results)?;
    std::fs::write(args.out_dir.join("results.csv"), results_csv(&results))?;
    // seed-granular JSONL trace plus an aggregate summary
    {
        use std::io::Write as _;
        let mut w = std::io::BufWriter::new(std::fs::File::create(
            args.out_dir.join("results.jsonl"),
        )?);
        for r in &results {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
    }
    let summary = serde_json::json!({
        "experiment": "quadsys",
        "seeds": results.len(),
        "best_error": results.iter().map(|r| r.error).fold(f64::INFINITY, f64::min),
        "worst_error": results.iter().map(|r| r.error).fold(f64::NEG_INFINITY, f64::max),
        "wall_ms": results.iter().map(|r| r.wall_ms).sum::<f64>(),
    });
    write_json(&args.out_dir.join("summary.json"), &summary)?;
    for r in &results {
        println!(
            "seed {:>4}  {:<14} intermediate {:<12} error {:.6e}",
            r.seed,
            format!("{:?}", r.method),
            r.intermediate_error
                .map(|e| format!("{e:.6e}"))
                .unwrap_or_else(|| "-".into()),
            r.error
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn run_seeds(
    n: usize,
    m: usize,
    seeds: &[u64],
    method: PipelineMethod,
    init: PipelineInit,
    opts: &PipelineOpts,
    jobs: usize,
) -> Result<Vec<PipelineResult>> {
    let run_one = |s: u64| -> Result<PipelineResult> {
        let sys = gen_quadsys(n, m, s)?;
        pipeline(&sys, method, init, s, opts)
    };
    if jobs <= 1 || seeds.len() <= 1 {
        return seeds.iter().map(|&s| run_one(s)).collect();
    }
    let chunk_size = seeds.len().div_ceil(jobs);
    let chunk_results: Vec<Vec<Result<PipelineResult>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .chunks(chunk_size)
            .map(|chunk| scope.spawn(move || chunk.iter().map(|&s| run_one(s)).collect()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    chunk_results.into_iter().flatten().collect()
}

fn results_csv(results: &[PipelineResult]) -> String {
    let mut out = String::from("seed,method,n,m,intermediate_error,error,iters,wall_ms\n");
    for r in results {
        let intermediate = r
            .intermediate_error
            .map(|e| format!("{e:.12e}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{:?},{},{},{},{:.12e},{},{:.3}\n",
            r.seed, r.method, r.n, r.m, intermediate, r.error, r.iters, r.wall_ms
        ));
    }
    out
}

#[derive(Args)]
pub struct CheckConvexityArgs {
    #[command(flatten)]
    pub constraint: ConstraintArgs,
}

pub fn check_convexity(args: CheckConvexityArgs) -> Result<ExitCode> {
    let ec = args.constraint.build(None)?;
    let verdict = convexity_sufficient(&ec);
    println!(
        "{}",
        serde_json::json!({ "convex_sufficient": verdict })
    );
    Ok(ExitCode::SUCCESS)
}

fn starting_point(
    x0: Option<&Path>,
    ec: &eigopt::constraints::EigenConstraint,
    n: usize,
) -> Result<SymMatrix> {
    match x0 {
        Some(path) => read_sym_matrix(path, false, &Tolerances::default()),
        None => {
            let zero = nalgebra::DMatrix::<f64>::zeros(n, n);
            Ok(project_spectral(&zero, ec, 1e-10)?.x_proj)
        }
    }
}

fn write_run_outputs(out_dir: &Path, config_echo: &serde_json::Value, report: &SolveReport) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("config.json"), config_echo)?;
    let trace = std::fs::File::create(out_dir.join("trace.jsonl"))?;
    report.write_jsonl(std::io::BufWriter::new(trace))?;
    write_json(&out_dir.join("summary.json"), &report.summary())?;
    write_json(
        &out_dir.join("x_final.json"),
        &MatrixJson::from_matrix(report.final_x.matrix()),
    )?;
    if !report.warnings.is_empty() {
        for w in &report.warnings {
            eprintln!("warning: {w}");
        }
    }
    println!("{}", serde_json::to_string(&report.summary())?);
    Ok(())
}

/// Fixed-budget experiments treat `MaxIter` as completion; one-shot solves
/// require stationarity.
fn run_exit(status: &SolveStatus, experiment: bool) -> ExitCode {
    match status {
        SolveStatus::Stationary => ExitCode::SUCCESS,
        SolveStatus::MaxIter if experiment => ExitCode::SUCCESS,
        SolveStatus::MaxIter => {
            eprintln!("stopped at the iteration cap before reaching stationarity");
            ExitCode::FAILURE
        }
        SolveStatus::Error(msg) => {
            eprintln!("solver error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}
