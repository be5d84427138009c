//! Euclidean projection onto `{x : Gx <= h}` by a dual active-set method.
//!
//! The objective `0.5*|x - y|^2` has identity Hessian, so the method starts
//! at the unconstrained minimum `x = y` and adds one violated constraint at a
//! time, taking primal/dual steps that keep the working-set normals linearly
//! independent. Terminates at the exact KKT point of the QP.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// One multiplier per constraint row, zero off the active set.
    pub multipliers: DVector<f64>,
    pub iterations: usize,
}

/// Declared infeasible when no primal or dual step exists for a violated row.
pub fn project_onto(
    y: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    feas_tol: f64,
) -> Result<QpSolution> {
    let n = y.len();
    let k = g.nrows();
    if g.ncols() != n || h.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "projection of length-{n} point onto {}x{} system with rhs {}",
            g.nrows(),
            g.ncols(),
            h.len()
        )));
    }

    let mut x = y.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut mu: Vec<f64> = Vec::new();
    let mut iterations = 0usize;
    let max_iter = 60 * (k + n) + 200;

    loop {
        // most violated row
        let gx = g * &x;
        let mut p = usize::MAX;
        let mut worst = feas_tol;
        for i in 0..k {
            let v = gx[i] - h[i];
            if v > worst {
                worst = v;
                p = i;
            }
        }
        if p == usize::MAX {
            let mut full = DVector::zeros(k);
            for (idx, &row) in active.iter().enumerate() {
                full[row] = mu[idx];
            }
            return Ok(QpSolution {
                x,
                multipliers: full,
                iterations,
            });
        }

        let np = g.row(p).transpose();
        let np_norm2 = np.norm_squared();
        let mut mu_p = 0.0f64;

        loop {
            iterations += 1;
            if iterations > max_iter {
                let gx = g * &x;
                let max_violation = (0..k).map(|i| gx[i] - h[i]).fold(f64::NEG_INFINITY, f64::max);
                return Err(Error::ProjectionIterationLimit {
                    best: x.as_slice().to_vec().into_boxed_slice(),
                    max_violation,
                });
            }

            // r solves (N'N) r = N' np; z = np - N r is the part of the new
            // normal outside the span of the active normals.
            let a = active.len();
            let (r, z) = if a == 0 {
                (DVector::zeros(0), np.clone())
            } else {
                let mut nmat = DMatrix::zeros(n, a);
                for (idx, &row) in active.iter().enumerate() {
                    nmat.set_column(idx, &g.row(row).transpose());
                }
                let ntn = nmat.transpose() * &nmat;
                let rhs = nmat.transpose() * &np;
                let r = solve_spd(&ntn, &rhs)?;
                let z = &np - &nmat * &r;
                (r, z)
            };

            let z_norm2 = z.norm_squared();
            let s = row_dot(g, p, &x) - h[p];
            let t2 = if z_norm2 > 1e-16 * np_norm2.max(1e-300) {
                s / z_norm2
            } else {
                f64::INFINITY
            };
            let mut t1 = f64::INFINITY;
            let mut drop_idx = usize::MAX;
            for (idx, &ri) in r.iter().enumerate() {
                if ri > 1e-12 {
                    let ratio = mu[idx] / ri;
                    if ratio < t1 {
                        t1 = ratio;
                        drop_idx = idx;
                    }
                }
            }

            if !t1.is_finite() && !t2.is_finite() {
                return Err(Error::Infeasible(format!(
                    "no feasible point satisfies row {p} (violation {s:.3e})"
                )));
            }

            let t = t1.min(t2);
            if t.is_finite() && t > 0.0 {
                x.axpy(-t, &z, 1.0);
                for (idx, m) in mu.iter_mut().enumerate() {
                    *m -= t * r[idx];
                }
                mu_p += t;
            }

            if t2 <= t1 {
                active.push(p);
                mu.push(mu_p);
                break;
            }
            // dual step hit zero first: release that row and retry p
            active.swap_remove(drop_idx);
            mu.swap_remove(drop_idx);
        }
    }
}

fn row_dot(g: &DMatrix<f64>, i: usize, x: &DVector<f64>) -> f64 {
    (0..g.ncols()).map(|j| g[(i, j)] * x[j]).sum()
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    // near-singular working set: retry with a small ridge
    let a = m.nrows();
    let scale = m.diagonal().amax().max(1.0);
    let ridged = m + DMatrix::identity(a, a) * (1e-12 * scale);
    ridged
        .cholesky()
        .map(|c| c.solve(rhs))
        .ok_or_else(|| Error::NumericalFailure("singular working-set system".into()))
}
