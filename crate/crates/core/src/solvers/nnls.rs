//! Non-negative least squares by the active-set (Lawson-Hanson) method.
//! Small dense problems only; used to fit KKT multipliers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Minimizes `|A x - b|_2` subject to `x >= 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (m, n) = (a.nrows(), a.ncols());
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "nnls with {m} rows and rhs of length {}",
            b.len()
        )));
    }
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * (1.0 + a.amax()) * (1.0 + b.amax());
    let max_outer = 4 * n + 16;

    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let mut j_best = usize::MAX;
        let mut w_best = tol;
        for j in 0..n {
            if !passive[j] && w[j] > w_best {
                w_best = w[j];
                j_best = j;
            }
        }
        if j_best == usize::MAX {
            return Ok(x);
        }
        passive[j_best] = true;

        loop {
            let s = ls_on_passive(a, b, &passive)?;
            let all_pos = (0..n).all(|j| !passive[j] || s[j] > tol);
            if all_pos {
                x = s;
                break;
            }
            // step toward s until the first passive coordinate hits zero
            let mut alpha = f64::INFINITY;
            for j in 0..n {
                if passive[j] && s[j] <= tol {
                    let denom = x[j] - s[j];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for j in 0..n {
                if passive[j] {
                    x[j] += alpha * (s[j] - x[j]);
                    if x[j] <= tol {
                        x[j] = 0.0;
                        passive[j] = false;
                    }
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Err(Error::IterationLimit {
        context: "non-negative least squares",
        residual: (b - a * &x).norm(),
    })
}

fn ls_on_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> Result<DVector<f64>> {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&j| passive[j]).collect();
    let mut sub = DMatrix::zeros(a.nrows(), cols.len());
    for (c, &j) in cols.iter().enumerate() {
        sub.set_column(c, &a.column(j));
    }
    let svd = sub.svd(true, true);
    let sol = svd
        .solve(b, 1e-12)
        .map_err(|e| Error::NumericalFailure(format!("least-squares solve: {e}")))?;
    let mut full = DVector::zeros(a.ncols());
    for (c, &j) in cols.iter().enumerate() {
        full[j] = sol[c];
    }
    Ok(full)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_optimum_when_positive() {
        // A = I, b = (1, 2): x = b
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_column_slice(&[1.0, 2.0]);
        let x = nnls(&a, &b).unwrap();
        assert!((x - b).norm() < 1e-10);
    }

    #[test]
    fn negative_component_clamped() {
        // A = I, b = (1, -2): best nonnegative fit is (1, 0)
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_column_slice(&[1.0, -2.0]);
        let x = nnls(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn kkt_conditions_hold_on_random_instances() {
        use crate::rng::standard_normal_matrix;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..25 {
            let a = standard_normal_matrix(&mut rng, 8, 5);
            let b = crate::rng::standard_normal_vector(&mut rng, 8);
            let x = nnls(&a, &b).unwrap();
            assert!(x.min() >= 0.0);
            let grad = a.transpose() * (&a * &x - &b);
            for j in 0..5 {
                if x[j] > 1e-9 {
                    assert!(grad[j].abs() < 1e-7, "stationarity on support: {}", grad[j]);
                } else {
                    assert!(grad[j] > -1e-7, "dual feasibility: {}", grad[j]);
                }
            }
        }
    }
}
