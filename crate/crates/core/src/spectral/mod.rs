//! Symmetric matrices and ordered spectral decompositions.
//!
//! Everything downstream manipulates a matrix through its eigenvalue vector
//! `lambda` sorted in descending order, so the decomposition type pins that
//! ordering as an invariant rather than a convention.

pub mod io;

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Numerical tolerances used when validating matrices and decompositions.
///
/// One record, passed explicitly where non-default behaviour is needed.
#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    /// Allowed entrywise asymmetry, relative to the largest entry magnitude.
    pub sym_tol: f64,
    /// Allowed deviation of `Q'Q` from the identity, per unit dimension.
    pub orth_tol: f64,
    /// Allowed relative reconstruction error of `Q diag(l) Q'` against the source.
    pub recon_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sym_tol: 1e-12,
            orth_tol: 1e-10,
            recon_tol: 1e-10,
        }
    }
}

/// Dense real symmetric matrix. Storage is exactly symmetric: construction
/// validates the input and stores `(M + M')/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Validates squareness, finiteness and symmetry (default tolerances).
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: DMatrix<f64>, tols: &Tolerances) -> Result<Self> {
        check_square_finite(&m)?;
        let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = tols.sym_tol * scale.max(1.0);
        let mut max_dev = 0.0f64;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                max_dev = max_dev.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if max_dev > tol {
            return Err(Error::Asymmetric { max_dev, tol });
        }
        Ok(Self::symmetrize_unchecked(m))
    }

    /// Builds from an already-symmetric expression without the tolerance check.
    /// The result is still exactly symmetrized.
    pub(crate) fn symmetrize_unchecked(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut data = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (data[(i, j)] + data[(j, i)]);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        SymMatrix { data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        if diag.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("diagonal"));
        }
        Ok(SymMatrix {
            data: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        })
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    /// Trace inner product `<X, Y>`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        frob_inner(&self.data, &other.data)
    }

    /// `a*X + b*Y`. Symmetry is preserved exactly by the linear combination.
    pub fn lin_comb(a: f64, x: &SymMatrix, b: f64, y: &SymMatrix) -> Result<Self> {
        if x.n() != y.n() {
            return Err(Error::DimensionMismatch(format!(
                "lin_comb of {}x{} and {}x{}",
                x.n(),
                x.n(),
                y.n(),
                y.n()
            )));
        }
        Ok(SymMatrix {
            data: a * &x.data + b * &y.data,
        })
    }
}

impl std::ops::Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl std::ops::Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl std::ops::Mul<&SymMatrix> for f64 {
    type Output = SymMatrix;
    fn mul(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: self * &rhs.data,
        }
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        io::MatrixJson::from_matrix(&self.data).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let dto = io::MatrixJson::deserialize(deserializer)?;
        let m = dto.into_matrix().map_err(D::Error::custom)?;
        SymMatrix::new(m).map_err(D::Error::custom)
    }
}

/// Frobenius inner product of two equally sized matrices.
pub fn frob_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidParams("dimension must be positive".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    Ok(())
}

/// Returns `(M + M')/2` for any square finite matrix.
pub fn symmetrize(m: &DMatrix<f64>) -> Result<SymMatrix> {
    check_square_finite(m)?;
    Ok(SymMatrix::symmetrize_unchecked(m.clone()))
}

/// Orthogonal eigenvectors paired with eigenvalues in descending order.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    q: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl SpectralDecomposition {
    /// Validates orthogonality of `q` and the descending order of `lambda`.
    pub fn new(q: DMatrix<f64>, lambda: DVector<f64>, tols: &Tolerances) -> Result<Self> {
        let n = q.nrows();
        if q.ncols() != n || lambda.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "eigenvector matrix {}x{} with {} eigenvalues",
                q.nrows(),
                q.ncols(),
                lambda.len()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) || lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("spectral decomposition"));
        }
        let orth_dev = (q.transpose() * &q - DMatrix::identity(n, n)).norm();
        if orth_dev > tols.orth_tol * n as f64 {
            return Err(Error::EigenFailed(format!(
                "eigenvector basis not orthogonal: |Q'Q - I| = {orth_dev:.3e}"
            )));
        }
        for i in 0..n.saturating_sub(1) {
            if lambda[i] < lambda[i + 1] {
                return Err(Error::InvalidParams(
                    "eigenvalues must be in descending order".into(),
                ));
            }
        }
        Ok(SpectralDecomposition { q, lambda })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// Rebuilds `Q diag(lambda) Q'` as a symmetric matrix.
    pub fn recompose(&self) -> SymMatrix {
        recompose(self)
    }

    /// Rebuilds with a replacement eigenvalue vector in the same basis.
    pub fn recompose_with(&self, lambda: &DVector<f64>) -> SymMatrix {
        let m = &self.q * DMatrix::from_diagonal(lambda) * self.q.transpose();
        SymMatrix::symmetrize_unchecked(m)
    }
}

/// Ordered eigendecomposition of a symmetric matrix (default tolerances).
pub fn eig_desc(x: &SymMatrix) -> Result<SpectralDecomposition> {
    eig_desc_with(x, &Tolerances::default())
}

pub fn eig_desc_with(x: &SymMatrix, tols: &Tolerances) -> Result<SpectralDecomposition> {
    let n = x.n();
    let eig = nalgebra::SymmetricEigen::try_new(x.data.clone(), f64::EPSILON, 200 * n.max(8))
        .ok_or_else(|| {
            Error::EigenFailed(format!("no convergence for {n}x{n} matrix (iteration cap)"))
        })?;

    // Stable descending sort; ties keep the eigensolver's basis order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let lambda = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut q = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        q.set_column(dst, &eig.eigenvectors.column(src));
    }

    let d = SpectralDecomposition::new(q, lambda, tols)?;
    let recon_err = (&d.recompose() - x).norm();
    if recon_err > tols.recon_tol * x.norm().max(1.0) {
        return Err(Error::EigenFailed(format!(
            "reconstruction error {recon_err:.3e} exceeds tolerance"
        )));
    }
    Ok(d)
}

/// Eigenvalues of `x` in descending order.
pub fn lambda_desc(x: &SymMatrix) -> Result<DVector<f64>> {
    Ok(eig_desc(x)?.lambda)
}

/// `Q diag(lambda) Q'`, symmetrized.
pub fn recompose(d: &SpectralDecomposition) -> SymMatrix {
    let m = &d.q * DMatrix::from_diagonal(&d.lambda) * d.q.transpose();
    SymMatrix::symmetrize_unchecked(m)
}
