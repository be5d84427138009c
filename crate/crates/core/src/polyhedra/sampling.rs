//! Feasible-point generation: an interior point via a Chebyshev-style LP and
//! a hit-and-run walk. Used to sample candidate solutions when certifying
//! global optimality empirically.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::polyhedra::{lp_min, LpResult, Polyhedron};
use crate::rng::standard_normal_vector;

/// A feasible point maximizing the (capped) slack radius: solves
/// `max t  s.t.  Gx + |G_i| t <= h, t <= 1`. Returns `(x, t)`; `t > 0`
/// certifies a strict interior.
pub fn interior_point(p: &Polyhedron) -> Result<(DVector<f64>, f64)> {
    let n = p.dim();
    let k = p.rows();
    let mut g_ext = DMatrix::zeros(k + 1, n + 1);
    let mut h_ext = DVector::zeros(k + 1);
    for i in 0..k {
        for j in 0..n {
            g_ext[(i, j)] = p.g()[(i, j)];
        }
        g_ext[(i, n)] = p.g().row(i).norm();
        h_ext[i] = p.h()[i];
    }
    g_ext[(k, n)] = 1.0; // t <= 1 keeps the LP bounded
    h_ext[k] = 1.0;

    let ext = Polyhedron::new(g_ext, h_ext)?;
    let mut c = DVector::zeros(n + 1);
    c[n] = -1.0;
    match lp_min(&c, &ext)? {
        LpResult::Optimal { x, .. } => {
            let t = x[n];
            if t < 0.0 {
                return Err(Error::Infeasible(
                    "no point with nonnegative slack radius".into(),
                ));
            }
            Ok((x.rows(0, n).into_owned(), t))
        }
        LpResult::Infeasible => Err(Error::Infeasible("polyhedron is empty".into())),
        LpResult::Unbounded => Err(Error::NumericalFailure(
            "capped interior LP reported unbounded".into(),
        )),
    }
}

/// Hit-and-run sampler. Each output takes `thin` random chord steps from the
/// previous state; chords are capped at `+-cap` so unbounded sets still mix.
/// The start point must be feasible (strictly interior for nondegenerate
/// chords).
pub fn hit_and_run<R: Rng>(
    p: &Polyhedron,
    start: &DVector<f64>,
    cap: f64,
    thin: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    let n = p.dim();
    if start.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "start point length {} vs {} variables",
            start.len(),
            n
        )));
    }
    let tol = p.feas_tol();
    if p.max_violation(start) > tol {
        return Err(Error::Infeasible("hit-and-run start is infeasible".into()));
    }
    if !(cap > 0.0) {
        return Err(Error::InvalidParams("cap must be positive".into()));
    }

    let mut x = start.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..thin.max(1) {
            let mut d = standard_normal_vector(rng, n);
            let nrm = d.norm();
            if nrm < 1e-12 {
                continue;
            }
            d /= nrm;
            let gd = p.g() * &d;
            let gx = p.g() * &x;
            let mut lo = -cap;
            let mut hi = cap;
            for i in 0..p.rows() {
                let slack = p.h()[i] - gx[i];
                if gd[i] > 1e-14 {
                    hi = hi.min(slack / gd[i]);
                } else if gd[i] < -1e-14 {
                    lo = lo.max(slack / gd[i]);
                }
            }
            if hi <= lo {
                continue; // degenerate chord; keep the current point
            }
            let alpha = lo + (hi - lo) * rng.random::<f64>();
            x.axpy(alpha, &d, 1.0);
        }
        out.push(x.clone());
    }
    Ok(out)
}
