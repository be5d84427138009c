//! Seedable random generation helpers.
//!
//! All randomness in this crate flows through [`rand_chacha::ChaCha8Rng`]
//! seeded from an explicit 64-bit seed (`ChaCha8Rng::seed_from_u64`), so any
//! experiment can be replayed bit-for-bit on the same build.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectral::SymMatrix;

/// Matrix with i.i.d. standard normal entries, filled column by column.
pub fn standard_normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn standard_normal_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the sign
/// convention `diag(R) > 0`.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = standard_normal_matrix(rng, n, n);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let col = -q.column(j);
            q.set_column(j, &col);
        }
    }
    q
}

/// Convenience draws used across tests and experiment drivers.
pub trait RngExt: Rng + Sized {
    /// Random symmetric matrix with entries on the order of `scale`.
    fn random_sym_matrix(&mut self, n: usize, scale: f64) -> SymMatrix {
        let g = scale * standard_normal_matrix(self, n, n);
        crate::spectral::symmetrize(&g).expect("finite square input")
    }

    /// Symmetric matrix with a prescribed (descending) eigenvalue vector in a
    /// random orthogonal basis.
    fn sym_matrix_with_eigenvalues(&mut self, lambda: &DVector<f64>) -> SymMatrix {
        let n = lambda.len();
        let q = random_orthogonal(self, n);
        let m = &q * DMatrix::from_diagonal(lambda) * q.transpose();
        SymMatrix::symmetrize_unchecked(m)
    }
}

impl<R: Rng> RngExt for R {}
