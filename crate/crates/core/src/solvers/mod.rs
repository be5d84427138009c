//! Solvers for eigenvalue-constrained matrix optimization.
//!
//! Two exact building blocks (global linear-objective minimization and
//! Euclidean projection, each one eigendecomposition plus a small LP/QP in
//! eigenvalue space), two first-order methods built on them (projected
//! gradient and Frank-Wolfe), and a KKT certificate for candidate solutions
//! with simple spectrum.

mod nnls;
mod report;

pub use report::{IterRecord, MeasureKind, SolveReport, SolveStatus, SolveSummary};

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::constraints::{
    convexity_sufficient, is_feasible, lambda_feasibility, EigenConstraint, FEAS_TOL,
};
use crate::error::{Error, Result};
use crate::polyhedra::{lp_min, ordered_polyhedron, qp_project_with, LpResult, Polyhedron};
use crate::spectral::{eig_desc, symmetrize, SpectralDecomposition, SymMatrix};

/// Smooth objective presented through value and gradient callbacks.
///
/// Gradients are symmetrized defensively on every call; an asymmetry beyond
/// `1e-6` is reported as a solver warning. Callbacks are invoked from the
/// solver's thread only.
type ValueFn<'a> = Box<dyn Fn(&SymMatrix) -> f64 + 'a>;
type GradientFn<'a> = Box<dyn Fn(&SymMatrix) -> DMatrix<f64> + 'a>;

pub struct ObjectiveOracle<'a> {
    value: ValueFn<'a>,
    gradient: GradientFn<'a>,
    lipschitz_hint: Option<f64>,
}

impl<'a> ObjectiveOracle<'a> {
    pub fn new(
        value: impl Fn(&SymMatrix) -> f64 + 'a,
        gradient: impl Fn(&SymMatrix) -> DMatrix<f64> + 'a,
    ) -> Self {
        ObjectiveOracle {
            value: Box::new(value),
            gradient: Box::new(gradient),
            lipschitz_hint: None,
        }
    }

    /// Attaches a known gradient-Lipschitz constant.
    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz_hint = Some(l);
        self
    }

    /// `F(X) = 0.5 * |X - target|_F^2`, gradient `X - target`, L = 1.
    pub fn half_sq_distance(target: &'a SymMatrix) -> Self {
        ObjectiveOracle::new(
            move |x: &SymMatrix| 0.5 * (x - target).norm().powi(2),
            move |x: &SymMatrix| (x - target).into_matrix(),
        )
        .with_lipschitz(1.0)
    }

    pub fn value(&self, x: &SymMatrix) -> f64 {
        (self.value)(x)
    }

    pub fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz_hint
    }

    /// Symmetrized gradient plus the worst entrywise asymmetry observed.
    pub fn gradient_sym(&self, x: &SymMatrix) -> Result<(SymMatrix, f64)> {
        let raw = (self.gradient)(x);
        let n = raw.nrows();
        if n != raw.ncols() || n != x.n() {
            return Err(Error::DimensionMismatch(format!(
                "gradient of shape {}x{} for {}x{} iterate",
                raw.nrows(),
                raw.ncols(),
                x.n(),
                x.n()
            )));
        }
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                dev = dev.max((raw[(i, j)] - raw[(j, i)]).abs());
            }
        }
        Ok((symmetrize(&raw)?, dev))
    }
}

const GRADIENT_ASYM_WARN: f64 = 1e-6;

/// Parameters of the inexact projected gradient method.
#[derive(Clone, Debug)]
pub struct PgmParams {
    /// Stationarity target: stop when the fresh-step gap `|X_k - X_{k+1}|_F`
    /// falls to `eps`.
    pub eps: f64,
    /// Projection inexactness budget, forwarded as the projection tolerance.
    pub delta: f64,
    /// Sufficient-decrease coefficient.
    pub alpha: f64,
    /// Backtracking shrink factor in (0, 1).
    pub tau1: f64,
    /// Stepsize tried first at every iteration.
    pub h0: f64,
    pub max_iter: usize,
    pub max_backtracks: u32,
    /// Bound on the feasible-set diameter; enables projection certificates.
    pub diam_est: Option<f64>,
    /// Capture every iterate in the report (memory-heavy).
    pub keep_iterates: bool,
}

impl PgmParams {
    pub fn new(eps: f64) -> Self {
        PgmParams {
            eps,
            delta: 1e-10,
            alpha: 1e-4,
            tau1: 0.5,
            h0: 1.0,
            max_iter: 1000,
            max_backtracks: 60,
            diam_est: None,
            keep_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParams("pgm: eps must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParams("pgm: delta must be in [0, 1)".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidParams("pgm: alpha must be > 0".into()));
        }
        if !(self.tau1 > 0.0 && self.tau1 < 1.0) {
            return Err(Error::InvalidParams("pgm: tau1 must be in (0, 1)".into()));
        }
        if !(self.h0 > 0.0) {
            return Err(Error::InvalidParams("pgm: h0 must be > 0".into()));
        }
        Ok(())
    }
}

/// Parameters of the Frank-Wolfe method.
#[derive(Clone, Debug)]
pub struct FwParams {
    /// Stationarity target: stop when `|m_k| <= (1 - alpha) * eps`.
    pub eps: f64,
    /// Fraction of `eps` reserved for subproblem inexactness.
    pub alpha: f64,
    /// Promised subproblem accuracy; must satisfy `delta < alpha * eps`.
    pub delta: f64,
    /// Initial curvature scale.
    pub theta0: f64,
    /// Growth factor applied when the decrease test fails.
    pub theta_grow: f64,
    /// Relaxation factor applied after a successful step (1 disables).
    pub theta_shrink: f64,
    pub max_iter: usize,
    pub keep_iterates: bool,
}

impl FwParams {
    pub fn new(eps: f64) -> Self {
        let alpha = 1e-4;
        FwParams {
            eps,
            alpha,
            // 1e-10 unless that would break delta < alpha * eps
            delta: (0.5 * alpha * eps).clamp(0.0, 1e-10),
            theta0: 1.0,
            theta_grow: 2.0,
            theta_shrink: 1.0,
            max_iter: 1000,
            keep_iterates: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParams("fw: eps must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::InvalidParams("fw: alpha must be in [0, 1)".into()));
        }
        if !(self.delta >= 0.0 && self.delta < self.alpha * self.eps) {
            return Err(Error::InvalidParams(
                "fw: delta must lie in [0, alpha * eps)".into(),
            ));
        }
        if !(self.theta0 > 0.0) {
            return Err(Error::InvalidParams("fw: theta0 must be > 0".into()));
        }
        if !(self.theta_grow > 1.0) {
            return Err(Error::InvalidParams("fw: theta_grow must be > 1".into()));
        }
        if !(self.theta_shrink >= 1.0) {
            return Err(Error::InvalidParams("fw: theta_shrink must be >= 1".into()));
        }
        Ok(())
    }
}


/// Result of the global linear-objective solve.
#[derive(Clone, Debug)]
pub enum LinearSolve {
    Optimal(LinearSolution),
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub x_opt: SymMatrix,
    /// Optimal objective `<C, X_opt>`, equal to the eigenvalue-space LP value.
    pub value: f64,
    /// Optimal eigenvalue vector (descending).
    pub lambda_opt: DVector<f64>,
}

impl LinearSolve {
    pub fn optimal(&self) -> Option<&LinearSolution> {
        match self {
            LinearSolve::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

/// Global minimizer of `<C, X>` over the constraint set, regardless of its
/// convexity.
///
/// With `(C + C')/2 = P diag(omega) P'` (`omega` descending), the optimal
/// eigenvalues solve the LP `min sum_i omega_i * lambda_{n+1-i}` over the
/// eigenvalue polyhedron, and the minimizer pairs the largest optimal
/// eigenvalue with the eigenvector of the smallest `omega`:
/// `X* = P diag(reverse(lambda*)) P'`.
pub fn solve_linear(
    c: &DMatrix<f64>,
    ec: &EigenConstraint,
    extra_box: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<LinearSolve> {
    let n = ec.n();
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "objective matrix {}x{} vs constraint over {n} eigenvalues",
            c.nrows(),
            c.ncols()
        )));
    }
    let sym_c = symmetrize(c)?;
    let dec = eig_desc(&sym_c)?;
    let omega = dec.lambda();

    let lp_cost = DVector::from_fn(n, |i, _| omega[n - 1 - i]);
    let poly = ordered_polyhedron(ec, ec.eps(), extra_box)?;
    match lp_min(&lp_cost, &poly)? {
        LpResult::Optimal { x: lambda, value } => {
            let reversed = DVector::from_fn(n, |i, _| lambda[n - 1 - i]);
            let x_opt = dec.recompose_with(&reversed);
            Ok(LinearSolve::Optimal(LinearSolution {
                x_opt,
                value,
                lambda_opt: lambda,
            }))
        }
        LpResult::Infeasible => Ok(LinearSolve::Infeasible),
        LpResult::Unbounded => Ok(LinearSolve::Unbounded),
    }
}

/// Exact Euclidean projection onto the constraint set.
#[derive(Clone, Debug)]
pub struct SpectralProjection {
    pub x_proj: SymMatrix,
    /// Inexactness certificate forwarded from the eigenvalue-space QP.
    pub delta_cert: f64,
    pub certified: bool,
    /// Projected eigenvalue vector (descending).
    pub lambda_proj: DVector<f64>,
}

/// Projects `y` onto the constraint set: with `(Y + Y')/2 = Q diag(w) Q'`
/// (`w` descending), the projected eigenvalues are the QP projection of `w`
/// onto the eigenvalue polyhedron and `X* = Q diag(lambda*) Q'`. The result
/// is a global minimizer of `|X - Y|_F` over the set even when the set is
/// non-convex.
pub fn project_spectral(
    y: &DMatrix<f64>,
    ec: &EigenConstraint,
    tol: f64,
) -> Result<SpectralProjection> {
    project_spectral_with(y, ec, tol, None)
}

pub fn project_spectral_with(
    y: &DMatrix<f64>,
    ec: &EigenConstraint,
    tol: f64,
    diam_est: Option<f64>,
) -> Result<SpectralProjection> {
    let n = ec.n();
    if y.nrows() != n || y.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "point of shape {}x{} vs constraint over {n} eigenvalues",
            y.nrows(),
            y.ncols()
        )));
    }
    let sym_y = symmetrize(y)?;
    let dec = eig_desc(&sym_y)?;
    let poly = ordered_polyhedron(ec, ec.eps(), None)?;
    let (x_proj, lambda_proj, delta_cert, certified) =
        project_decomposed(&dec, &poly, tol, diam_est)?;
    Ok(SpectralProjection {
        x_proj,
        delta_cert,
        certified,
        lambda_proj,
    })
}

/// Shared projection step: eigenvalues of the decomposed point are projected
/// in eigenvalue space and recomposed in the same basis.
fn project_decomposed(
    dec: &SpectralDecomposition,
    poly: &Polyhedron,
    tol: f64,
    diam_est: Option<f64>,
) -> Result<(SymMatrix, DVector<f64>, f64, bool)> {
    let r = qp_project_with(dec.lambda(), poly, tol, diam_est)?;
    let x = dec.recompose_with(&r.x_proj);
    Ok((x, r.x_proj, r.delta_cert, r.certified))
}

/// Inexact projected gradient method.
///
/// Each iteration projects `X_k - h_k grad F(X_k)` exactly onto the
/// constraint set (the projection tolerance is the `delta` budget), stops
/// when the fresh-step gap falls to `eps`, and otherwise backtracks `h_k`
/// until `F(X_{k+1}) <= F(X_k) - alpha |X_{k+1} - X_k|_F^2`. Every iterate
/// is feasible, including over non-convex constraint sets; the sublinear
/// stationarity guarantee additionally requires a convex set.
pub fn pgm(
    oracle: &ObjectiveOracle,
    ec: &EigenConstraint,
    x0: &SymMatrix,
    params: &PgmParams,
) -> Result<SolveReport> {
    params.validate()?;
    let feas = is_feasible(x0, ec, FEAS_TOL)?;
    if !feas.feasible {
        return Err(Error::Infeasible(format!(
            "pgm starting point violates the constraint by {:.3e}",
            feas.max_violation
        )));
    }

    let start = Instant::now();
    let poly = ordered_polyhedron(ec, ec.eps(), None)?;
    let mut warnings: Vec<String> = Vec::new();
    let mut asym_warned = false;

    if let Some(l) = oracle.lipschitz_hint() {
        let h_low = params.tau1 / (l + 2.0 * params.alpha);
        let first_term = 0.5 * h_low * params.eps;
        let required = match params.diam_est {
            Some(d) => {
                let (g0, _) = oracle.gradient_sym(x0)?;
                let m = g0.norm();
                let eps_tol = h_low * params.eps / (2.0 * (d + m * h_low + 1.0));
                first_term.min(0.5 * eps_tol * eps_tol)
            }
            None => first_term,
        };
        if params.delta > required {
            warnings.push(format!(
                "projection budget delta={:.3e} exceeds the sufficient accuracy {:.3e} \
                 for the requested eps; stationarity at eps is not guaranteed",
                params.delta, required
            ));
        }
    }

    let mut x = x0.clone();
    let mut f = oracle.value(&x);
    let f0 = f;
    let mut records: Vec<IterRecord> = Vec::new();
    let mut iterates = params.keep_iterates.then(|| vec![x.clone()]);
    let mut status = SolveStatus::MaxIter;
    let mut final_measure = f64::NAN;

    'outer: for k in 0..params.max_iter {
        let (grad, dev) = oracle.gradient_sym(&x)?;
        if dev > GRADIENT_ASYM_WARN && !asym_warned {
            warnings.push(format!(
                "gradient asymmetry {dev:.3e} at iteration {k}; symmetrized defensively"
            ));
            asym_warned = true;
        }

        let project = |h: f64| -> Result<(SymMatrix, f64)> {
            let target = SymMatrix::lin_comb(1.0, &x, -h, &grad)?;
            let dec = eig_desc(&target)?;
            let (xp, _, cert, _) = project_decomposed(&dec, &poly, params.delta.max(1e-300), params.diam_est)?;
            Ok((xp, cert))
        };

        let mut h = params.h0;
        let mut backtracks = 0u32;
        let (mut x_next, mut cert) = match project(h) {
            Ok(v) => v,
            Err(e) => {
                status = SolveStatus::Error(format!("projection failed: {e}"));
                break 'outer;
            }
        };
        let mut gap = (&x_next - &x).norm();

        if gap <= params.eps {
            records.push(IterRecord {
                k,
                f,
                measure: gap,
                step: h,
                theta: None,
                backtracks: 0,
                accepted: false,
                delta_cert: Some(cert),
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
            status = SolveStatus::Stationary;
            final_measure = gap;
            break 'outer;
        }

        let mut f_next = oracle.value(&x_next);
        while f_next > f - params.alpha * gap * gap {
            backtracks += 1;
            if backtracks > params.max_backtracks {
                status = SolveStatus::Error(format!(
                    "line search exhausted {} backtracks at iteration {k} \
                     (alpha or the Lipschitz scale is misconfigured)",
                    params.max_backtracks
                ));
                final_measure = gap;
                break 'outer;
            }
            h *= params.tau1;
            match project(h) {
                Ok(v) => {
                    x_next = v.0;
                    cert = v.1;
                }
                Err(e) => {
                    status = SolveStatus::Error(format!("projection failed: {e}"));
                    break 'outer;
                }
            }
            gap = (&x_next - &x).norm();
            f_next = oracle.value(&x_next);
        }
        if matches!(status, SolveStatus::Error(_)) {
            break 'outer;
        }

        records.push(IterRecord {
            k,
            f: f_next,
            measure: gap,
            step: h,
            theta: None,
            backtracks,
            accepted: true,
            delta_cert: Some(cert),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        x = x_next;
        f = f_next;
        final_measure = gap;
        if let Some(hist) = iterates.as_mut() {
            hist.push(x.clone());
        }
    }

    Ok(SolveReport {
        status,
        measure_kind: MeasureKind::ConsecutiveGap,
        f0,
        records,
        final_value: f,
        final_measure,
        final_x: x,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        warnings,
        iterates,
    })
}

/// Frank-Wolfe with an eigenvalue trust box.
///
/// The direction subproblem minimizes `<grad F(X_k), D - X_k>` over the
/// constraint set intersected with `|lambda(D) - lambda(X_k)|_inf <= 1`, an
/// outer relaxation of the unit Frobenius ball that stays a linear
/// eigenvalue program. Requires the row-monotonicity convexity certificate:
/// iterates are convex combinations and would otherwise leave the set.
pub fn fw(
    oracle: &ObjectiveOracle,
    ec: &EigenConstraint,
    x0: &SymMatrix,
    params: &FwParams,
) -> Result<SolveReport> {
    params.validate()?;
    if !convexity_sufficient(ec) {
        return Err(Error::UnsupportedConstraint(
            "a row of A is not non-increasing; Frank-Wolfe iterates could leave the set".into(),
        ));
    }
    let feas = is_feasible(x0, ec, FEAS_TOL)?;
    if !feas.feasible {
        return Err(Error::Infeasible(format!(
            "fw starting point violates the constraint by {:.3e}",
            feas.max_violation
        )));
    }

    let start = Instant::now();
    let mut warnings: Vec<String> = Vec::new();
    let mut asym_warned = false;

    let mut x = x0.clone();
    let mut f = oracle.value(&x);
    let f0 = f;
    let mut theta = params.theta0;
    let mut records: Vec<IterRecord> = Vec::new();
    let mut iterates = params.keep_iterates.then(|| vec![x.clone()]);
    let mut status = SolveStatus::MaxIter;
    let mut final_measure = f64::NAN;

    'outer: for k in 0..params.max_iter {
        let (grad, dev) = oracle.gradient_sym(&x)?;
        if dev > GRADIENT_ASYM_WARN && !asym_warned {
            warnings.push(format!(
                "gradient asymmetry {dev:.3e} at iteration {k}; symmetrized defensively"
            ));
            asym_warned = true;
        }

        let lam = eig_desc(&x)?.lambda().clone();
        let lower = lam.map(|v| v - 1.0);
        let upper = lam.map(|v| v + 1.0);
        let sub = solve_linear(grad.matrix(), ec, Some((&lower, &upper)))?;
        let mut dir = match sub {
            LinearSolve::Optimal(s) => s.x_opt,
            LinearSolve::Infeasible | LinearSolve::Unbounded => {
                return Err(Error::NumericalFailure(
                    "trust-box subproblem must be feasible and bounded".into(),
                ));
            }
        };

        let mut m_k = grad.inner(&dir) - grad.inner(&x);
        if m_k > 0.0 {
            // the LP can only report a nonnegative gap through tolerances;
            // fall back to the null step
            dir = x.clone();
            m_k = 0.0;
        }

        if m_k.abs() <= (1.0 - params.alpha) * params.eps {
            records.push(IterRecord {
                k,
                f,
                measure: m_k.abs(),
                step: 0.0,
                theta: Some(theta),
                backtracks: 0,
                accepted: false,
                delta_cert: None,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
            status = SolveStatus::Stationary;
            final_measure = m_k.abs();
            break 'outer;
        }

        let mut growths = 0u32;
        let (gamma, f_next, x_next, theta_used) = loop {
            let gamma = (m_k.abs() / theta).min(1.0);
            let x_try = SymMatrix::lin_comb(1.0 - gamma, &x, gamma, &dir)?;
            let f_try = oracle.value(&x_try);
            let required = (m_k * m_k / (2.0 * theta)).min(if m_k.abs() > theta {
                m_k.abs() - 0.5 * theta
            } else {
                f64::INFINITY
            });
            // float-resolution slack keeps vanishing steps from stalling
            let slack = 8.0 * f64::EPSILON * (1.0 + f.abs());
            if f_try <= f - required + slack {
                break (gamma, f_try, x_try, theta);
            }
            growths += 1;
            if growths > 60 {
                status = SolveStatus::Error(format!(
                    "curvature scale grew {growths} times without the decrease \
                     inequality holding at iteration {k}"
                ));
                final_measure = m_k.abs();
                break 'outer;
            }
            theta *= params.theta_grow;
        };

        records.push(IterRecord {
            k,
            f: f_next,
            measure: m_k.abs(),
            step: gamma,
            theta: Some(theta_used),
            backtracks: growths,
            accepted: true,
            delta_cert: None,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        x = x_next;
        f = f_next;
        final_measure = m_k.abs();
        theta = (theta / params.theta_shrink).max(params.theta0);
        if let Some(hist) = iterates.as_mut() {
            hist.push(x.clone());
        }
    }

    Ok(SolveReport {
        status,
        measure_kind: MeasureKind::FwGap,
        f0,
        records,
        final_value: f,
        final_measure,
        final_x: x,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        warnings,
        iterates,
    })
}

/// First-order certificate at a candidate solution with distinct eigenvalues.
#[derive(Clone, Debug)]
pub struct KktReport {
    /// One multiplier per constraint row (rows of `A`, then the ordering
    /// rows when the constraint has `eps > 0`); zero off the active set.
    pub mu: DVector<f64>,
    /// `|grad F(X) + sum_i mu_i V diag(a_i) V'|_F` after the multiplier fit.
    pub residual: f64,
    /// Worst complementary-slackness product `|mu_i * g_i(X)|`.
    pub comp_slack: f64,
    pub min_eig_gap: f64,
    /// False when the active rows are linearly dependent; multipliers then
    /// exist but may not be unique.
    pub multipliers_unique: bool,
}

/// Fits nonnegative multipliers on the active rows by non-negative least
/// squares against `-grad F(X)` in the eigenbasis of `X`. Requires all
/// eigenvalue gaps to exceed `1e-6 * (1 + |lambda|_inf)`; repeated
/// eigenvalues make the constraint gradients set-valued and are rejected.
pub fn kkt_certificate(
    x: &SymMatrix,
    oracle: &ObjectiveOracle,
    ec: &EigenConstraint,
    active_tol: f64,
) -> Result<KktReport> {
    if x.n() != ec.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix of size {} vs constraint over {} eigenvalues",
            x.n(),
            ec.n()
        )));
    }
    if !(active_tol > 0.0) {
        return Err(Error::InvalidParams("active_tol must be > 0".into()));
    }
    let dec = eig_desc(x)?;
    let lam = dec.lambda();
    let n = x.n();

    let mut min_eig_gap = f64::INFINITY;
    for i in 0..n.saturating_sub(1) {
        min_eig_gap = min_eig_gap.min(lam[i] - lam[i + 1]);
    }
    let gap_tol = 1e-6 * (1.0 + lam.amax());
    if n > 1 && min_eig_gap <= gap_tol {
        return Err(Error::RepeatedEigenvalues {
            min_gap: min_eig_gap,
            gap_tol,
        });
    }

    // constraint rows in eigenvalue space
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 0..ec.m() {
        rows.push((ec.a().row(i).transpose(), ec.b()[i]));
    }
    if ec.eps() > 0.0 {
        let d = crate::polyhedra::difference_matrix(n);
        for i in 0..n - 1 {
            rows.push((d.row(i).transpose(), -ec.eps()));
        }
    }

    let active: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, (a, b))| (a.dot(lam) - b).abs() <= active_tol)
        .map(|(i, _)| i)
        .collect();

    let (grad, _) = oracle.gradient_sym(x)?;
    let target = DVector::from_iterator(n * n, grad.matrix().iter().map(|v| -v));

    let mut mu = DVector::zeros(rows.len());
    let residual;
    let mut multipliers_unique = true;

    if active.is_empty() {
        residual = grad.norm();
    } else {
        let mut basis = DMatrix::zeros(n * n, active.len());
        for (col, &i) in active.iter().enumerate() {
            let m = dec.q() * DMatrix::from_diagonal(&rows[i].0) * dec.q().transpose();
            basis.set_column(col, &DVector::from_iterator(n * n, m.iter().copied()));
        }
        let fit = nnls::nnls(&basis, &target)?;
        residual = (&basis * &fit - &target).norm();
        for (col, &i) in active.iter().enumerate() {
            mu[i] = fit[col];
        }

        // linear independence of the active rows in eigenvalue space
        let mut act = DMatrix::zeros(active.len(), n);
        for (r, &i) in active.iter().enumerate() {
            act.set_row(r, &rows[i].0.transpose());
        }
        let svd = act.svd(false, false);
        let s_hi = svd.singular_values.max();
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * s_hi.max(1.0))
            .count();
        multipliers_unique = rank == active.len();
    }

    let comp_slack = rows
        .iter()
        .enumerate()
        .map(|(i, (a, b))| (mu[i] * (a.dot(lam) - b)).abs())
        .fold(0.0f64, f64::max);

    Ok(KktReport {
        mu,
        residual,
        comp_slack,
        min_eig_gap,
        multipliers_unique,
    })
}

/// Feasibility of an eigenvalue vector against a constraint, shared with
/// the experiment drivers.
pub fn lambda_is_feasible(lambda: &DVector<f64>, ec: &EigenConstraint, tol: f64) -> bool {
    lambda_feasibility(lambda, ec, tol).feasible
}
