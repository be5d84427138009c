//! Dense two-phase tableau simplex for `min c'x  s.t.  Gx <= h` with free `x`.
//!
//! Free variables are split as `x = xp - xm`; slacks complete the standard
//! form. Rows with negative right-hand side get an artificial variable in
//! phase 1. Dantzig pricing with a permanent switch to Bland's rule after a
//! stall keeps the method finite on degenerate instances.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub enum SimplexOutcome {
    Optimal { x: DVector<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

const PIVOT_TOL: f64 = 1e-9;

struct Tableau {
    rows: usize,
    cols: usize, // structural columns only, rhs kept separately
    a: Vec<f64>,
    rhs: Vec<f64>,
    obj: Vec<f64>,
    obj_val: f64,
    basis: Vec<usize>,
    enterable: Vec<bool>,
    scratch: Vec<f64>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let cols = self.cols;
        let inv = 1.0 / self.a[pr * cols + pc];
        for c in 0..cols {
            self.a[pr * cols + c] *= inv;
        }
        self.rhs[pr] *= inv;
        self.a[pr * cols + pc] = 1.0;

        self.scratch.clear();
        self.scratch
            .extend_from_slice(&self.a[pr * cols..pr * cols + cols]);
        let prhs = self.rhs[pr];

        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.a[r * cols + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[r * cols..r * cols + cols];
            for (rv, pv) in row.iter_mut().zip(self.scratch.iter()) {
                *rv -= f * pv;
            }
            row[pc] = 0.0;
            self.rhs[r] -= f * prhs;
        }

        let f = self.obj[pc];
        if f != 0.0 {
            for (ov, pv) in self.obj.iter_mut().zip(self.scratch.iter()) {
                *ov -= f * pv;
            }
            self.obj[pc] = 0.0;
            self.obj_val -= f * prhs;
        }
        self.basis[pr] = pc;
    }

    /// Runs pricing/ratio-test pivots until optimality or unboundedness.
    fn optimize(&mut self, opt_tol: f64) -> Result<bool> {
        let stall_limit = 30 * (self.rows + self.cols);
        let hard_limit = 400 * (self.rows + self.cols) + 2000;
        let mut iters = 0usize;
        loop {
            iters += 1;
            if iters > hard_limit {
                return Err(Error::NumericalFailure(format!(
                    "simplex exceeded {hard_limit} pivots"
                )));
            }
            let bland = iters > stall_limit;

            // pricing
            let mut pc = usize::MAX;
            let mut best = -opt_tol;
            for c in 0..self.cols {
                if !self.enterable[c] {
                    continue;
                }
                let r = self.obj[c];
                if bland {
                    if r < -opt_tol {
                        pc = c;
                        break;
                    }
                } else if r < best {
                    best = r;
                    pc = c;
                }
            }
            if pc == usize::MAX {
                return Ok(true); // optimal
            }

            // ratio test; ties resolved toward the smallest basis index
            let mut pr = usize::MAX;
            let mut best_ratio = f64::INFINITY;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs[r] / a;
                    if ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12
                            && pr != usize::MAX
                            && self.basis[r] < self.basis[pr])
                    {
                        best_ratio = ratio;
                        pr = r;
                    }
                }
            }
            if pr == usize::MAX {
                return Ok(false); // unbounded direction
            }
            self.pivot(pr, pc);
        }
    }
}

/// Minimizes `c'x` over `Gx <= h` with `x` unrestricted in sign.
pub fn solve_min(
    c: &DVector<f64>,
    g: &DMatrix<f64>,
    h: &DVector<f64>,
    opt_tol: f64,
) -> Result<SimplexOutcome> {
    let n = c.len();
    let k = g.nrows();
    if g.ncols() != n || h.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "lp with {n} vars, constraint matrix {}x{}, rhs {}",
            g.nrows(),
            g.ncols(),
            h.len()
        )));
    }
    if k == 0 {
        return Ok(if c.iter().all(|&v| v == 0.0) {
            SimplexOutcome::Optimal {
                x: DVector::zeros(n),
                value: 0.0,
            }
        } else {
            SimplexOutcome::Unbounded
        });
    }

    // columns: xp (n) | xm (n) | slack (k) | artificial (one per negated row)
    let neg: Vec<bool> = (0..k).map(|i| h[i] < 0.0).collect();
    let n_art = neg.iter().filter(|&&v| v).count();
    let cols = 2 * n + k + n_art;

    let mut a = vec![0.0f64; k * cols];
    let mut rhs = vec![0.0f64; k];
    let mut basis = vec![0usize; k];
    let mut art_col = 2 * n + k;
    for i in 0..k {
        let sign = if neg[i] { -1.0 } else { 1.0 };
        for j in 0..n {
            let v = sign * g[(i, j)];
            a[i * cols + j] = v;
            a[i * cols + n + j] = -v;
        }
        a[i * cols + 2 * n + i] = sign;
        rhs[i] = sign * h[i];
        if neg[i] {
            a[i * cols + art_col] = 1.0;
            basis[i] = art_col;
            art_col += 1;
        } else {
            basis[i] = 2 * n + i;
        }
    }

    let mut t = Tableau {
        rows: k,
        cols,
        a,
        rhs,
        obj: vec![0.0; cols],
        obj_val: 0.0,
        basis,
        enterable: vec![true; cols],
        scratch: Vec::with_capacity(cols),
    };

    // Phase 1: minimize the sum of artificials. Reduced costs start as
    // -(sum of artificial rows) over non-artificial columns.
    if n_art > 0 {
        for i in 0..k {
            if t.basis[i] >= 2 * n + k {
                for c in 0..cols {
                    t.obj[c] -= t.at(i, c);
                }
                t.obj_val -= t.rhs[i];
            }
        }
        for c in 2 * n + k..cols {
            t.obj[c] = 0.0; // basic artificials have zero reduced cost
        }
        let optimal = t.optimize(opt_tol)?;
        if !optimal {
            return Err(Error::NumericalFailure(
                "phase-1 objective unbounded".into(),
            ));
        }
        let infeas = -t.obj_val; // phase-1 optimum
        let h_scale = 1.0 + h.amax();
        if infeas > 1e-7 * h_scale {
            return Ok(SimplexOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..k {
            if t.basis[r] >= 2 * n + k {
                if let Some(pc) = (0..2 * n + k).find(|&c| t.at(r, c).abs() > PIVOT_TOL) {
                    t.pivot(r, pc);
                }
                // else: redundant row, artificial stays basic at zero
            }
        }
        for c in 2 * n + k..cols {
            t.enterable[c] = false;
        }
    }

    // Phase 2: real objective, reduced against the current basis.
    let mut cost = vec![0.0f64; cols];
    for j in 0..n {
        cost[j] = c[j];
        cost[n + j] = -c[j];
    }
    t.obj = cost.clone();
    t.obj_val = 0.0;
    for r in 0..k {
        let cb = cost[t.basis[r]];
        if cb != 0.0 {
            for cc in 0..cols {
                t.obj[cc] -= cb * t.at(r, cc);
            }
            t.obj_val -= cb * t.rhs[r];
        }
    }
    for r in 0..k {
        t.obj[t.basis[r]] = 0.0;
    }

    let optimal = t.optimize(opt_tol)?;
    if !optimal {
        return Ok(SimplexOutcome::Unbounded);
    }

    let mut x = DVector::zeros(n);
    for r in 0..k {
        let b = t.basis[r];
        if b < n {
            x[b] += t.rhs[r];
        } else if b < 2 * n {
            x[b - n] -= t.rhs[r];
        }
    }
    // objective value recomputed from the solution to avoid drift
    let value = c.dot(&x);
    Ok(SimplexOutcome::Optimal { x, value })
}
