//! Linear inequality constraints on the descending eigenvalue vector of a
//! symmetric matrix: presets, feasibility checks, a sufficient convexity
//! test, a continuous feasible path between feasible points, and the
//! tightened-ordering optimal-value gap bound.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyhedra::{chi_constant, difference_matrix};
use crate::spectral::{eig_desc, SymMatrix};

/// Default absolute tolerance on constraint residuals.
pub const FEAS_TOL: f64 = 1e-8;

/// The pair `(A, b)` restricting the descending eigenvalue vector by
/// `A lambda <= b`, plus the ordering-gap parameter `eps >= 0` (`eps > 0`
/// additionally enforces `lambda_{i+1} <= lambda_i - eps`).
#[derive(Clone, Debug)]
pub struct EigenConstraint {
    a: DMatrix<f64>,
    b: DVector<f64>,
    eps: f64,
}

impl EigenConstraint {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, eps: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint rows but rhs of length {}",
                a.nrows(),
                b.len()
            )));
        }
        if a.ncols() == 0 {
            return Err(Error::InvalidParams(
                "constraint needs >= 1 eigenvalue".into(),
            ));
        }
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("eigenvalue constraint"));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParams(format!("eps must be >= 0, got {eps}")));
        }
        Ok(EigenConstraint { a, b, eps })
    }

    /// Constraint on `n` eigenvalues with no rows beyond the ordering.
    pub fn unconstrained(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(0, n), DVector::zeros(0), 0.0)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Matrix dimension the constraint applies to.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Number of constraint rows.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParams(format!("eps must be >= 0, got {eps}")));
        }
        self.eps = eps;
        Ok(self)
    }

    /// Stacks the rows of two constraints over the same eigenvalue space.
    /// The larger of the two ordering gaps is kept.
    pub fn concat(&self, other: &EigenConstraint) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch(format!(
                "cannot stack constraints over {} and {} eigenvalues",
                self.n(),
                other.n()
            )));
        }
        let m = self.m() + other.m();
        let mut a = DMatrix::zeros(m, self.n());
        a.view_mut((0, 0), (self.m(), self.n())).copy_from(&self.a);
        a.view_mut((self.m(), 0), (other.m(), self.n()))
            .copy_from(&other.a);
        let mut b = DVector::zeros(m);
        b.rows_mut(0, self.m()).copy_from(&self.b);
        b.rows_mut(self.m(), other.m()).copy_from(&other.b);
        EigenConstraint::new(a, b, self.eps.max(other.eps))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EigenConstraintJson {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    eps: f64,
    /// Required when `A` has no rows, as the dimension is not inferable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
}

impl Serialize for EigenConstraint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EigenConstraintJson {
            a: (0..self.m())
                .map(|i| (0..self.n()).map(|j| self.a[(i, j)]).collect())
                .collect(),
            b: self.b.iter().copied().collect(),
            eps: self.eps,
            n: if self.m() == 0 { Some(self.n()) } else { None },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EigenConstraint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let dto = EigenConstraintJson::deserialize(d)?;
        let m = dto.a.len();
        let n = if m > 0 {
            dto.a[0].len()
        } else {
            dto.n
                .ok_or_else(|| D::Error::custom("empty A requires explicit n"))?
        };
        if dto.a.iter().any(|r| r.len() != n) {
            return Err(D::Error::custom("ragged constraint rows"));
        }
        let a = DMatrix::from_fn(m, n, |i, j| dto.a[i][j]);
        EigenConstraint::new(a, DVector::from_vec(dto.b), dto.eps).map_err(D::Error::custom)
    }
}

/// Named constraint families.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    /// All eigenvalues nonnegative: the single row `-lambda_n <= 0`.
    Psd,
    /// Every eigenvalue in `[lower, upper]`, encoded by the two binding rows
    /// `lambda_1 <= upper` and `-lambda_n <= -lower` (the ordering implies
    /// the rest, and both rows pass the convexity test).
    EigBox { lower: f64, upper: f64 },
    /// Condition-number cap: `lambda_1 - kappa * lambda_n <= 0` and
    /// `lambda_n >= 0`.
    CondNumber { kappa: f64 },
    /// Rows `c_i' lambda <= 1` with `c_i = [i, i-1, ..., 1, 0, ..., 0]`.
    M3 { m: usize },
    /// `lambda_i in [0, delta]` for `i = k+1..n`: a non-convex surrogate for
    /// `rank(X) <= k` with `X` positive semidefinite.
    RankRelax { k: usize, delta: f64 },
    /// The non-convex two-eigenvalue box `lambda_1 in [3,5]`,
    /// `lambda_2 in [0,2]`.
    Example21,
}

/// Builds the `(A, b)` rows of a named constraint set over `n` eigenvalues.
pub fn preset(kind: &Preset, n: usize) -> Result<EigenConstraint> {
    if n == 0 {
        return Err(Error::InvalidParams("dimension must be positive".into()));
    }
    match kind {
        Preset::Psd => {
            let mut a = DMatrix::zeros(1, n);
            a[(0, n - 1)] = -1.0;
            EigenConstraint::new(a, DVector::from_column_slice(&[0.0]), 0.0)
        }
        Preset::EigBox { lower, upper } => {
            if !(lower <= upper) {
                return Err(Error::InvalidParams(format!(
                    "box bounds [{lower}, {upper}] are inverted"
                )));
            }
            let mut a = DMatrix::zeros(2, n);
            a[(0, 0)] = 1.0;
            a[(1, n - 1)] = -1.0;
            EigenConstraint::new(a, DVector::from_column_slice(&[*upper, -*lower]), 0.0)
        }
        Preset::CondNumber { kappa } => {
            if !(*kappa > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "kappa must be > 0, got {kappa}"
                )));
            }
            let mut a = DMatrix::zeros(2, n);
            a[(0, 0)] += 1.0;
            a[(0, n - 1)] += -kappa;
            a[(1, n - 1)] = -1.0;
            EigenConstraint::new(a, DVector::zeros(2), 0.0)
        }
        Preset::M3 { m } => {
            if *m == 0 || *m > n {
                return Err(Error::InvalidParams(format!(
                    "m must be in 1..={n}, got {m}"
                )));
            }
            let mut a = DMatrix::zeros(*m, n);
            for i in 0..*m {
                for j in 0..=i {
                    a[(i, j)] = (i + 1 - j) as f64;
                }
            }
            EigenConstraint::new(a, DVector::repeat(*m, 1.0), 0.0)
        }
        Preset::RankRelax { k, delta } => {
            if !(*delta >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "delta must be >= 0, got {delta}"
                )));
            }
            let tail = n.saturating_sub(*k);
            let mut a = DMatrix::zeros(2 * tail, n);
            let mut b = DVector::zeros(2 * tail);
            for (r, i) in (*k..n).enumerate() {
                a[(2 * r, i)] = 1.0;
                b[2 * r] = *delta;
                a[(2 * r + 1, i)] = -1.0;
            }
            EigenConstraint::new(a, b, 0.0)
        }
        Preset::Example21 => {
            if n != 2 {
                return Err(Error::InvalidParams(format!(
                    "the two-eigenvalue box preset requires n = 2, got {n}"
                )));
            }
            let a = DMatrix::from_row_slice(
                4,
                2,
                &[1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0],
            );
            EigenConstraint::new(a, DVector::from_column_slice(&[5.0, -3.0, 2.0, 0.0]), 0.0)
        }
    }
}

/// Feasibility verdict with the largest signed residual (negative = slack).
#[derive(Clone, Copy, Debug)]
pub struct Feasibility {
    pub feasible: bool,
    pub max_violation: f64,
}

/// Checks `A lambda(X) <= b` and, when `eps > 0`, the tightened ordering
/// rows, all to the absolute tolerance `tol`.
pub fn is_feasible(x: &SymMatrix, ec: &EigenConstraint, tol: f64) -> Result<Feasibility> {
    if x.n() != ec.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix of size {} vs constraint over {} eigenvalues",
            x.n(),
            ec.n()
        )));
    }
    let lambda = eig_desc(x)?.lambda().clone();
    Ok(lambda_feasibility(&lambda, ec, tol))
}

pub(crate) fn lambda_feasibility(
    lambda: &DVector<f64>,
    ec: &EigenConstraint,
    tol: f64,
) -> Feasibility {
    let mut worst = f64::NEG_INFINITY;
    if ec.m() > 0 {
        let r = ec.a() * lambda - ec.b();
        worst = r.iter().fold(worst, |a, &v| a.max(v));
    }
    for i in 0..lambda.len().saturating_sub(1) {
        worst = worst.max(lambda[i + 1] - lambda[i] + ec.eps());
    }
    Feasibility {
        feasible: worst <= tol,
        max_violation: worst,
    }
}

/// Sufficient condition for the matrix-space constraint set to be convex:
/// every row of `A` is non-increasing. This is not necessary; sets encoded
/// with other row patterns may still be convex.
pub fn convexity_sufficient(ec: &EigenConstraint) -> bool {
    (0..ec.m()).all(|i| {
        (0..ec.n().saturating_sub(1)).all(|j| ec.a()[(i, j)] >= ec.a()[(i, j + 1)])
    })
}

/// A point on a continuous feasible path from `x1` (t = 0) to `x2` (t = 1).
///
/// Both endpoint bases are sign-aligned into the rotation group, the
/// connecting rotation is interpolated through its principal logarithm, and
/// the eigenvalues are interpolated linearly; every intermediate point then
/// satisfies the constraint because the eigenvalue polyhedron is convex.
pub fn feasible_path(
    x1: &SymMatrix,
    x2: &SymMatrix,
    ec: &EigenConstraint,
    t: f64,
) -> Result<SymMatrix> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParams(format!("t must be in [0,1], got {t}")));
    }
    for (name, x) in [("x1", x1), ("x2", x2)] {
        let f = is_feasible(x, ec, FEAS_TOL)?;
        if !f.feasible {
            return Err(Error::Infeasible(format!(
                "path endpoint {name} violates the constraint by {:.3e}",
                f.max_violation
            )));
        }
    }

    let d1 = eig_desc(x1)?;
    let d2 = eig_desc(x2)?;
    let q1 = align_to_rotation(d1.q().clone());
    let q2 = align_to_rotation(d2.q().clone());

    let r = q1.transpose() * &q2;
    let gt = &q1 * rotation_power(&r, t)?;

    let lam = (1.0 - t) * d1.lambda() + t * d2.lambda();
    let m = &gt * DMatrix::from_diagonal(&lam) * gt.transpose();
    Ok(SymMatrix::symmetrize_unchecked(m))
}

/// Flips the sign of the last column if needed so the determinant is +1.
/// `Q diag(l) Q'` is unchanged by a column sign flip.
fn align_to_rotation(mut q: DMatrix<f64>) -> DMatrix<f64> {
    if q.determinant() < 0.0 {
        let n = q.ncols();
        let col = -q.column(n - 1);
        q.set_column(n - 1, &col);
    }
    q
}

/// Fractional power `R^t` of a rotation matrix through its real Schur form:
/// the quasi-diagonal blocks are plane rotations whose angles scale by `t`.
fn rotation_power(r: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    let n = r.nrows();
    if n == 1 {
        return Ok(DMatrix::from_element(1, 1, 1.0));
    }
    let schur = nalgebra::Schur::try_new(r.clone(), 1e-14, 100_000)
        .ok_or_else(|| Error::NumericalFailure("Schur decomposition stalled".into()))?;
    let (u, tt) = schur.unpack();

    // collect rotation planes: adjacent 2x2 blocks and paired -1 entries
    let mut planes: Vec<(usize, usize, f64)> = Vec::new();
    let mut minus_ones: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && tt[(i + 1, i)].abs() > 1e-8 {
            let theta = tt[(i + 1, i)].atan2(tt[(i, i)]);
            planes.push((i, i + 1, theta));
            i += 2;
        } else {
            if tt[(i, i)] < 0.0 {
                minus_ones.push(i);
            }
            i += 1;
        }
    }
    if !minus_ones.len().is_multiple_of(2) {
        return Err(Error::NumericalFailure(
            "rotation block structure inconsistent with det = +1".into(),
        ));
    }
    for pair in minus_ones.chunks(2) {
        planes.push((pair[0], pair[1], std::f64::consts::PI));
    }

    let mut e = DMatrix::identity(n, n);
    for &(a, b, theta) in &planes {
        let (s, c) = (t * theta).sin_cos();
        e[(a, a)] = c;
        e[(b, b)] = c;
        e[(a, b)] = -s;
        e[(b, a)] = s;
    }
    Ok(&u * e * u.transpose())
}

/// Bound on the optimal-value gap between the base model and its
/// `eps`-tightened ordering variant for an `L`-Lipschitz objective:
/// `L * chi([A' | D']) * sqrt(n-1) * eps`.
pub fn eps_gap_bound(ec: &EigenConstraint, lipschitz: f64, eps: f64) -> Result<f64> {
    if !(lipschitz >= 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidParams(
            "lipschitz constant and eps must be >= 0".into(),
        ));
    }
    let n = ec.n();
    if n <= 1 || eps == 0.0 {
        return Ok(0.0);
    }
    let d = difference_matrix(n);
    let mut z = DMatrix::zeros(n, ec.m() + n - 1);
    z.view_mut((0, 0), (n, ec.m()))
        .copy_from(&ec.a().transpose());
    z.view_mut((0, ec.m()), (n, n - 1)).copy_from(&d.transpose());
    let chi = chi_constant(&z)?;
    Ok(lipschitz * chi * ((n - 1) as f64).sqrt() * eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngExt;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psd_preset_rows() {
        let ec = preset(&Preset::Psd, 3).unwrap();
        assert_eq!(ec.m(), 1);
        assert_eq!(ec.a()[(0, 2)], -1.0);
        assert_eq!(ec.a()[(0, 0)], 0.0);
        assert_eq!(ec.b()[0], 0.0);
    }

    #[test]
    fn cond_number_preset_rows() {
        let ec = preset(&Preset::CondNumber { kappa: 1000.0 }, 2).unwrap();
        assert_eq!(ec.a()[(0, 0)], 1.0);
        assert_eq!(ec.a()[(0, 1)], -1000.0);
        assert_eq!(ec.a()[(1, 0)], 0.0);
        assert_eq!(ec.a()[(1, 1)], -1.0);
        assert_eq!(ec.b().amax(), 0.0);
        assert!(convexity_sufficient(&ec));
    }

    #[test]
    fn m3_preset_rows() {
        let ec = preset(&Preset::M3 { m: 2 }, 3).unwrap();
        assert_eq!(ec.a().row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
        assert_eq!(ec.a().row(1).iter().copied().collect::<Vec<_>>(), vec![2.0, 1.0, 0.0]);
        assert_eq!(ec.b().iter().copied().collect::<Vec<_>>(), vec![1.0, 1.0]);
        assert!(convexity_sufficient(&ec));
    }

    #[test]
    fn convexity_check_on_single_rows() {
        let yes = EigenConstraint::new(
            DMatrix::from_row_slice(1, 2, &[0.0, -1.0]),
            DVector::zeros(1),
            0.0,
        )
        .unwrap();
        assert!(convexity_sufficient(&yes));
        let no = EigenConstraint::new(
            DMatrix::from_row_slice(1, 2, &[-1.0, 0.0]),
            DVector::zeros(1),
            0.0,
        )
        .unwrap();
        assert!(!convexity_sufficient(&no));
    }

    #[test]
    fn feasibility_on_example_box() {
        let ec = preset(&Preset::Example21, 2).unwrap();
        let x = SymMatrix::from_diagonal(&[4.0, 1.0]).unwrap();
        assert!(is_feasible(&x, &ec, FEAS_TOL).unwrap().feasible);
    }

    #[test]
    fn zero_matrix_is_psd_feasible() {
        let ec = preset(&Preset::Psd, 3).unwrap();
        assert!(is_feasible(&SymMatrix::zeros(3), &ec, FEAS_TOL).unwrap().feasible);
    }

    #[test]
    fn midpoint_of_feasible_pair_can_violate() {
        // lambda_1 >= 3 and lambda_2 <= 1
        let ec = EigenConstraint::new(
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]),
            DVector::from_column_slice(&[-3.0, 1.0]),
            0.0,
        )
        .unwrap();
        let x1 = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[35.0, 15.0, 15.0, 6.0])).unwrap();
        let x2 = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[4.0, 17.0, 17.0, 63.0])).unwrap();
        assert!(is_feasible(&x1, &ec, FEAS_TOL).unwrap().feasible);
        assert!(is_feasible(&x2, &ec, FEAS_TOL).unwrap().feasible);

        let mid = SymMatrix::lin_comb(0.5, &x1, 0.5, &x2).unwrap();
        let f = is_feasible(&mid, &ec, FEAS_TOL).unwrap();
        assert!(!f.feasible);
        // lambda_2(mid) = (54 - sqrt(1249)) / 2, so the residual on row 2 is that minus 1
        let expect = (54.0 - 1249.0f64.sqrt()) / 2.0 - 1.0;
        assert!((f.max_violation - expect).abs() < 1e-9);
    }

    #[test]
    fn path_endpoints_and_feasibility() {
        let ec = preset(&Preset::Example21, 2).unwrap();
        let x1 = SymMatrix::from_diagonal(&[4.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x2 = rng.sym_matrix_with_eigenvalues(&DVector::from_column_slice(&[3.0, 0.0]));

        let p0 = feasible_path(&x1, &x2, &ec, 0.0).unwrap();
        assert!((&p0 - &x1).norm() < 1e-9);
        let p1 = feasible_path(&x1, &x2, &ec, 1.0).unwrap();
        assert!((&p1 - &x2).norm() < 1e-9);

        for k in 0..=100 {
            let t = k as f64 / 100.0;
            let pt = feasible_path(&x1, &x2, &ec, t).unwrap();
            let f = is_feasible(&pt, &ec, 1e-7).unwrap();
            assert!(f.feasible, "t={t} violation {:.3e}", f.max_violation);
        }
    }

    #[test]
    fn path_between_identical_endpoints_is_constant() {
        let ec = preset(&Preset::Psd, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = rng.sym_matrix_with_eigenvalues(&DVector::from_column_slice(&[3.0, 2.0, 1.0]));
        for t in [0.0, 0.3, 0.7, 1.0] {
            let pt = feasible_path(&x, &x, &ec, t).unwrap();
            assert!((&pt - &x).norm() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn path_rejects_infeasible_endpoint() {
        let ec = preset(&Preset::Psd, 2).unwrap();
        let good = SymMatrix::from_diagonal(&[1.0, 0.5]).unwrap();
        let bad = SymMatrix::from_diagonal(&[1.0, -0.5]).unwrap();
        assert!(matches!(
            feasible_path(&good, &bad, &ec, 0.5),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn gap_bound_trivial_cases() {
        let ec = preset(&Preset::Psd, 3).unwrap();
        assert_eq!(eps_gap_bound(&ec, 2.0, 0.0).unwrap(), 0.0);
        let ec1 = preset(&Preset::Psd, 1).unwrap();
        assert_eq!(eps_gap_bound(&ec1, 2.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn gap_bound_matches_manual_chi() {
        let ec = preset(&Preset::EigBox { lower: 0.0, upper: 1.0 }, 3).unwrap();
        let d = difference_matrix(3);
        let mut z = DMatrix::zeros(3, 2 + 2);
        z.view_mut((0, 0), (3, 2)).copy_from(&ec.a().transpose());
        z.view_mut((0, 2), (3, 2)).copy_from(&d.transpose());
        let chi = chi_constant(&z).unwrap();
        let got = eps_gap_bound(&ec, 1.0, 1e-2).unwrap();
        assert!((got - chi * 2.0f64.sqrt() * 1e-2).abs() < 1e-12);
    }

    #[test]
    fn constraint_json_round_trip() {
        let ec = preset(&Preset::Example21, 2).unwrap();
        let s = serde_json::to_string(&ec).unwrap();
        let back: EigenConstraint = serde_json::from_str(&s).unwrap();
        assert_eq!(back.a(), ec.a());
        assert_eq!(back.b(), ec.b());
        assert_eq!(back.eps(), ec.eps());
        // unknown keys rejected
        assert!(serde_json::from_str::<EigenConstraint>(
            r#"{"A": [[1.0]], "b": [0.0], "eps": 0.0, "bogus": 1}"#
        )
        .is_err());
    }
}
