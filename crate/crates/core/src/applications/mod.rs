//! Experiment drivers: preconditioner design under eigenvalue constraints,
//! and systems of quadratic equations through a rank-1 eigenvalue relaxation
//! polished by Newton's method.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{preset, EigenConstraint, Preset};
use crate::error::{Error, Result};
use crate::rng::{standard_normal_matrix, standard_normal_vector};
use crate::solvers::{
    fw, pgm, project_spectral, FwParams, ObjectiveOracle, PgmParams, SolveReport,
};
use crate::spectral::{eig_desc, SymMatrix};

/// Random positive semidefinite matrix `V V'` with standard normal `V`,
/// deterministic in the seed.
pub fn gen_spd(n: usize, seed: u64) -> Result<SymMatrix> {
    if n == 0 {
        return Err(Error::InvalidParams("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = standard_normal_matrix(&mut rng, n, n);
    let m = &v * v.transpose();
    Ok(SymMatrix::symmetrize_unchecked(m))
}

/// Constraint families used in the preconditioning experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PrecondSet {
    /// Eigenvalues in `[0.001, 1]`; condition number at most 1000.
    M1,
    /// `lambda_1 - kappa * lambda_n <= 0`, `lambda_n >= 0`.
    M2 { kappa: f64 },
    /// The staircase rows `c_i' lambda <= 1`.
    M3 { m: usize },
}

impl PrecondSet {
    pub fn constraint(&self, n: usize) -> Result<EigenConstraint> {
        match self {
            PrecondSet::M1 => preset(
                &Preset::EigBox {
                    lower: 0.001,
                    upper: 1.0,
                },
                n,
            ),
            PrecondSet::M2 { kappa } => preset(&Preset::CondNumber { kappa: *kappa }, n),
            PrecondSet::M3 { m } => preset(&Preset::M3 { m: *m }, n),
        }
    }
}

/// Which first-order method drives an experiment.
#[derive(Clone, Debug)]
pub enum SolverChoice {
    Pgm(PgmParams),
    Fw(FwParams),
}

/// Minimizes `0.5 * |A X - I|_F^2` over the chosen eigenvalue constraint,
/// started from the projection of the identity onto the set (the identity
/// itself whenever it is feasible).
///
/// The squared residual is used so the gradient `sym(A'(AX - I))` is
/// Lipschitz with constant `lambda_max(A)^2` on all of matrix space.
pub fn precondition(
    a: &SymMatrix,
    set: &PrecondSet,
    alg: SolverChoice,
) -> Result<SolveReport> {
    let n = a.n();
    let ec = set.constraint(n)?;
    let id = DMatrix::<f64>::identity(n, n);
    let x0 = project_spectral(&id, &ec, 1e-10)?.x_proj;

    let lam1 = eig_desc(a)?.lambda()[0];
    let lipschitz = lam1 * lam1;

    let value = |x: &SymMatrix| {
        let r = a.matrix() * x.matrix() - DMatrix::<f64>::identity(n, n);
        0.5 * r.norm_squared()
    };
    let gradient = |x: &SymMatrix| {
        let r = a.matrix() * x.matrix() - DMatrix::<f64>::identity(n, n);
        let g = a.matrix() * r;
        0.5 * (&g + g.transpose())
    };
    let oracle = ObjectiveOracle::new(value, gradient).with_lipschitz(lipschitz);

    match alg {
        SolverChoice::Pgm(params) => pgm(&oracle, &ec, &x0, &params),
        SolverChoice::Fw(params) => fw(&oracle, &ec, &x0, &params),
    }
}

/// A system of quadratic equations `x' Q_i x = b_i`.
#[derive(Clone, Debug)]
pub struct QuadSystem {
    pub q_list: Vec<SymMatrix>,
    pub b: DVector<f64>,
    /// A vector known to solve the system, when the instance was planted.
    pub planted_x: Option<DVector<f64>>,
}

impl QuadSystem {
    pub fn n(&self) -> usize {
        self.q_list.first().map(|q| q.n()).unwrap_or(0)
    }

    pub fn m(&self) -> usize {
        self.q_list.len()
    }

    /// Residual vector `r_i = x' Q_i x - b_i`.
    pub fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.q_list
                .iter()
                .zip(self.b.iter())
                .map(|(q, b)| quad_form(q, x) - b),
        )
    }
}

fn quad_form(q: &SymMatrix, x: &DVector<f64>) -> f64 {
    (q.matrix() * x).dot(x)
}

/// Random solvable instance: symmetric normal `Q_i`, right-hand sides from a
/// planted normal vector.
pub fn gen_quadsys(n: usize, m: usize, seed: u64) -> Result<QuadSystem> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParams("n and m must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_list: Vec<SymMatrix> = (0..m)
        .map(|_| {
            let g = standard_normal_matrix(&mut rng, n, n);
            SymMatrix::symmetrize_unchecked(0.5 * (&g + g.transpose()))
        })
        .collect();
    let y = standard_normal_vector(&mut rng, n);
    let b = DVector::from_iterator(m, q_list.iter().map(|q| quad_form(q, &y)));
    Ok(QuadSystem {
        q_list,
        b,
        planted_x: Some(y),
    })
}

/// Squared residual `sum_i (x' Q_i x - b_i)^2`.
pub fn quad_error(sys: &QuadSystem, x: &DVector<f64>) -> Result<f64> {
    if x.len() != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for a {}-variable system",
            x.len(),
            sys.n()
        )));
    }
    Ok(sys.residual(x).norm_squared())
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub error: f64,
    pub iters: usize,
    pub converged: bool,
}

/// Newton's method on the square system `x' Q_i x = b_i` (`m = n`), stopping
/// on `|r|^2 <= tol`. A singular Jacobian falls back to a ridge least-squares
/// step; ten consecutive fallbacks abort. Returns the best iterate seen.
pub fn newton_quad(
    sys: &QuadSystem,
    x0: &DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<NewtonOutcome> {
    let n = sys.n();
    if sys.m() != n {
        return Err(Error::InvalidParams(format!(
            "square system required: n = {n}, m = {}",
            sys.m()
        )));
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "start of length {} for a {n}-variable system",
            x0.len()
        )));
    }

    let mut x = x0.clone();
    let mut best_x = x.clone();
    let mut best_err = quad_error(sys, &x)?;
    let mut consecutive_fallbacks = 0u32;

    for iters in 0..max_iter {
        let r = sys.residual(&x);
        let err = r.norm_squared();
        if err < best_err {
            best_err = err;
            best_x = x.clone();
        }
        if err <= tol {
            return Ok(NewtonOutcome {
                x,
                error: err,
                iters,
                converged: true,
            });
        }

        let mut jac = DMatrix::zeros(n, n);
        for (i, q) in sys.q_list.iter().enumerate() {
            let row = 2.0 * (q.matrix() * &x);
            jac.set_row(i, &row.transpose());
        }
        let step = match jac.clone().lu().solve(&r) {
            Some(s) if s.iter().all(|v| v.is_finite()) => {
                consecutive_fallbacks = 0;
                s
            }
            _ => {
                consecutive_fallbacks += 1;
                if consecutive_fallbacks >= 10 {
                    return Err(Error::NumericalFailure(
                        "persistently singular Jacobian in Newton's method".into(),
                    ));
                }
                let jt = jac.transpose();
                let ridged = &jt * &jac + DMatrix::identity(n, n) * 1e-10;
                ridged
                    .lu()
                    .solve(&(&jt * &r))
                    .filter(|s| s.iter().all(|v| v.is_finite()))
                    .ok_or_else(|| {
                        Error::NumericalFailure("ridge fallback failed in Newton's method".into())
                    })?
            }
        };
        x -= step;
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(NewtonOutcome {
                x: best_x,
                error: best_err,
                iters,
                converged: false,
            });
        }
    }

    let err = quad_error(sys, &x)?;
    let (x, error) = if err <= best_err { (x, err) } else { (best_x, best_err) };
    Ok(NewtonOutcome {
        x,
        error,
        iters: max_iter,
        converged: error <= tol,
    })
}

/// Feasible diagonal start `diag(1, delta/2, ..., delta/2)` for the rank-1
/// relaxation.
pub fn default_rank_relax_init(n: usize, delta: f64) -> Result<SymMatrix> {
    let mut d = vec![0.5 * delta; n];
    d[0] = 1.0;
    SymMatrix::from_diagonal(&d)
}

/// Minimizes `sum_i (<Q_i, X> - b_i)^2` over the (non-convex) rank-1
/// relaxation `lambda_i(X) in [0, delta]` for `i >= 2` with the projected
/// gradient method. Projections are exact despite the non-convexity, so all
/// iterates stay feasible.
pub fn sco_relax_solve(
    sys: &QuadSystem,
    delta: f64,
    x0: &SymMatrix,
    params: &PgmParams,
) -> Result<SolveReport> {
    let n = sys.n();
    let ec = preset(&Preset::RankRelax { k: 1, delta }, n)?;
    let oracle = quad_oracle(sys);
    pgm(&oracle, &ec, x0, params)
}

/// Objective callbacks for the lifted quadratic-system residual.
pub fn quad_oracle(sys: &QuadSystem) -> ObjectiveOracle<'_> {
    let value = move |x: &SymMatrix| {
        sys.q_list
            .iter()
            .zip(sys.b.iter())
            .map(|(q, b)| (q.inner(x) - b).powi(2))
            .sum::<f64>()
    };
    let gradient = move |x: &SymMatrix| {
        let n = sys.n();
        let mut g = DMatrix::zeros(n, n);
        for (q, b) in sys.q_list.iter().zip(sys.b.iter()) {
            let r = q.inner(x) - b;
            g += 2.0 * r * q.matrix();
        }
        g
    };
    ObjectiveOracle::new(value, gradient)
}

/// Best rank-1 factor: `sqrt(max(lambda_1, 0)) * v_1`. The sign is
/// immaterial for quadratic forms.
pub fn rank1_extract(x: &SymMatrix) -> Result<DVector<f64>> {
    let dec = eig_desc(x)?;
    let lam1 = dec.lambda()[0];
    if lam1 <= 0.0 {
        return Ok(DVector::zeros(x.n()));
    }
    Ok(lam1.sqrt() * dec.q().column(0).into_owned())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMethod {
    Newton,
    ConvexNewton,
    ScoNewton,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PipelineInit {
    /// Standard normal starts; Newton takes the best of ten restarts, the
    /// matrix stages fall back to the fixed feasible diagonal.
    Random,
    /// One draw `x* + eta * sigma` around the planted solution, shared by
    /// Newton and the rank-1 relaxation stage (which lifts it to `x0 x0'`).
    NearSolution { eta: f64 },
    /// The fixed feasible diagonal for matrix stages; Newton starts from its
    /// rank-1 factor.
    FixedFeasible,
}

#[derive(Clone, Debug)]
pub struct PipelineOpts {
    /// Rank-relaxation slack.
    pub delta: f64,
    pub pgm: PgmParams,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
    /// Restarts for randomly initialized Newton.
    pub restarts: usize,
}

impl Default for PipelineOpts {
    fn default() -> Self {
        let mut pgm = PgmParams::new(1e-8);
        pgm.max_iter = 10_000;
        PipelineOpts {
            delta: 1e-10,
            pgm,
            newton_max_iter: 5000,
            newton_tol: 1e-14,
            restarts: 10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineResult {
    pub method: PipelineMethod,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub x_final: Vec<f64>,
    /// Final squared residual after Newton polishing.
    pub error: f64,
    /// Squared residual of the rank-1 extraction before Newton (matrix
    /// methods only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intermediate_error: Option<f64>,
    pub iters: usize,
    pub wall_ms: f64,
}

/// Runs one quadratic-system solve for one seed. Identical seeds yield
/// identical numerics.
pub fn pipeline(
    sys: &QuadSystem,
    method: PipelineMethod,
    init: PipelineInit,
    seed: u64,
    opts: &PipelineOpts,
) -> Result<PipelineResult> {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.n();

    let near_start = |rng: &mut ChaCha8Rng, eta: f64| -> Result<DVector<f64>> {
        let planted = sys.planted_x.as_ref().ok_or_else(|| {
            Error::InvalidParams("near-solution init requires a planted solution".into())
        })?;
        Ok(planted + eta * standard_normal_vector(rng, n))
    };

    let (x_final, error, intermediate_error, iters) = match method {
        PipelineMethod::Newton => {
            let starts: Vec<DVector<f64>> = match init {
                PipelineInit::Random => (0..opts.restarts)
                    .map(|_| standard_normal_vector(&mut rng, n))
                    .collect(),
                PipelineInit::NearSolution { eta } => vec![near_start(&mut rng, eta)?],
                PipelineInit::FixedFeasible => {
                    vec![rank1_extract(&default_rank_relax_init(n, opts.delta)?)?]
                }
            };
            let mut best: Option<NewtonOutcome> = None;
            let mut total_iters = 0usize;
            for x0 in &starts {
                let out = match newton_quad(sys, x0, opts.newton_max_iter, opts.newton_tol) {
                    Ok(out) => out,
                    Err(Error::NumericalFailure(_)) => NewtonOutcome {
                        x: x0.clone(),
                        error: quad_error(sys, x0)?,
                        iters: 0,
                        converged: false,
                    },
                    Err(e) => return Err(e),
                };
                total_iters += out.iters;
                if best.as_ref().is_none_or(|b| out.error < b.error) {
                    best = Some(out);
                }
            }
            let best = best.expect("at least one start");
            (best.x, best.error, None, total_iters)
        }
        PipelineMethod::ConvexNewton => {
            let ec = preset(&Preset::Psd, n)?;
            let oracle = quad_oracle(sys);
            let x0 = SymMatrix::identity(n);
            let report = pgm(&oracle, &ec, &x0, &opts.pgm)?;
            let stage_iters = report.records.len();
            let x1 = rank1_extract(&report.final_x)?;
            let intermediate = quad_error(sys, &x1)?;
            let (x, error, it) = polish(sys, &x1, intermediate, opts)?;
            (x, error, Some(intermediate), stage_iters + it)
        }
        PipelineMethod::ScoNewton => {
            let x0 = match init {
                PipelineInit::NearSolution { eta } => {
                    let v = near_start(&mut rng, eta)?;
                    SymMatrix::symmetrize_unchecked(&v * v.transpose())
                }
                PipelineInit::Random | PipelineInit::FixedFeasible => {
                    default_rank_relax_init(n, opts.delta)?
                }
            };
            let report = sco_relax_solve(sys, opts.delta, &x0, &opts.pgm)?;
            let stage_iters = report.records.len();
            let x1 = rank1_extract(&report.final_x)?;
            let intermediate = quad_error(sys, &x1)?;
            let (x, error, it) = polish(sys, &x1, intermediate, opts)?;
            (x, error, Some(intermediate), stage_iters + it)
        }
    };

    Ok(PipelineResult {
        method,
        seed,
        n,
        m: sys.m(),
        x_final: x_final.iter().copied().collect(),
        error,
        intermediate_error,
        iters,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Newton polish that falls back to the unpolished point when Newton fails
/// or worsens the residual.
fn polish(
    sys: &QuadSystem,
    x1: &DVector<f64>,
    err1: f64,
    opts: &PipelineOpts,
) -> Result<(DVector<f64>, f64, usize)> {
    match newton_quad(sys, x1, opts.newton_max_iter, opts.newton_tol) {
        Ok(out) if out.error <= err1 => Ok((out.x, out.error, out.iters)),
        Ok(out) => Ok((x1.clone(), err1, out.iters)),
        Err(Error::NumericalFailure(_)) => Ok((x1.clone(), err1, 0)),
        Err(e) => Err(e),
    }
}
