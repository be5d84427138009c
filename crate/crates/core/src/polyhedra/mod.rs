//! Eigenvalue-space polyhedral kernel: half-space systems, LP minimization,
//! Euclidean projection, and the Hoffman-bound condition constant.

pub mod qp;
pub mod sampling;
pub mod simplex;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constraints::EigenConstraint;
use crate::error::{Error, Result};
use crate::spectral::io::MatrixJson;

/// Explicit half-space system `{x : Gx <= h}`.
#[derive(Clone, Debug)]
pub struct Polyhedron {
    g: DMatrix<f64>,
    h: DVector<f64>,
}

impl Polyhedron {
    pub fn new(g: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        if g.nrows() != h.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint rows but rhs of length {}",
                g.nrows(),
                h.len()
            )));
        }
        if g.ncols() == 0 {
            return Err(Error::InvalidParams("polyhedron needs >= 1 variable".into()));
        }
        if g.iter().any(|v| !v.is_finite()) || h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("polyhedron"));
        }
        Ok(Polyhedron { g, h })
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn h(&self) -> &DVector<f64> {
        &self.h
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.g.ncols()
    }

    /// Number of half-space rows.
    pub fn rows(&self) -> usize {
        self.g.nrows()
    }

    /// Default feasibility slack, scaled by the right-hand side.
    pub fn feas_tol(&self) -> f64 {
        let h_inf = if self.h.is_empty() { 0.0 } else { self.h.amax() };
        1e-9 * (1.0 + h_inf)
    }

    /// Largest row violation `max_i (Gx - h)_i`; negative means interior slack.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        if self.rows() == 0 {
            return f64::NEG_INFINITY;
        }
        let gx = &self.g * x;
        (0..self.rows())
            .map(|i| gx[i] - self.h[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.max_violation(x) <= tol
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyhedronJson {
    g: MatrixJson,
    h: Vec<f64>,
}

impl Serialize for Polyhedron {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyhedronJson {
            g: MatrixJson::from_matrix(&self.g),
            h: self.h.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polyhedron {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let dto = PolyhedronJson::deserialize(d)?;
        let g = dto.g.into_matrix().map_err(D::Error::custom)?;
        Polyhedron::new(g, DVector::from_vec(dto.h)).map_err(D::Error::custom)
    }
}

/// The `(n-1) x n` difference matrix whose row `i` is `e_{i+2} - e_{i+1}`
/// (zero-based): `Dx <= 0` encodes a descending vector.
pub fn difference_matrix(n: usize) -> DMatrix<f64> {
    let rows = n.saturating_sub(1);
    let mut d = DMatrix::zeros(rows, n);
    for i in 0..rows {
        d[(i, i)] = -1.0;
        d[(i, i + 1)] = 1.0;
    }
    d
}

/// Builds the eigenvalue-space feasible set of a constraint: the rows of `A`,
/// the descending-order rows (tightened to a gap of `eps`), and an optional
/// componentwise box.
pub fn ordered_polyhedron(
    ec: &EigenConstraint,
    eps: f64,
    extra_box: Option<(&DVector<f64>, &DVector<f64>)>,
) -> Result<Polyhedron> {
    if eps < 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParams(format!("eps must be >= 0, got {eps}")));
    }
    let n = ec.n();
    let m = ec.m();
    let order_rows = n - 1;
    let box_rows = match extra_box {
        Some((lo, up)) => {
            if lo.len() != n || up.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "box bounds of length {}/{} for {n} variables",
                    lo.len(),
                    up.len()
                )));
            }
            if lo.iter().zip(up.iter()).any(|(l, u)| l > u) {
                return Err(Error::InvalidParams(
                    "box lower bound exceeds upper bound".into(),
                ));
            }
            2 * n
        }
        None => 0,
    };

    let total = m + order_rows + box_rows;
    let mut g = DMatrix::zeros(total, n);
    let mut h = DVector::zeros(total);

    g.view_mut((0, 0), (m, n)).copy_from(ec.a());
    h.rows_mut(0, m).copy_from(ec.b());

    let d = difference_matrix(n);
    g.view_mut((m, 0), (order_rows, n)).copy_from(&d);
    for i in 0..order_rows {
        h[m + i] = -eps;
    }

    if let Some((lo, up)) = extra_box {
        for j in 0..n {
            g[(m + order_rows + j, j)] = 1.0;
            h[m + order_rows + j] = up[j];
            g[(m + order_rows + n + j, j)] = -1.0;
            h[m + order_rows + n + j] = -lo[j];
        }
    }

    Polyhedron::new(g, h)
}

/// Outcome of a linear minimization over a polyhedron.
#[derive(Clone, Debug)]
pub enum LpResult {
    Optimal { x: DVector<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpResult {
    pub fn optimal(&self) -> Option<(&DVector<f64>, f64)> {
        match self {
            LpResult::Optimal { x, value } => Some((x, *value)),
            _ => None,
        }
    }
}

pub const OPT_TOL: f64 = 1e-9;

/// Global minimization of `c'x` over the polyhedron with a simplex
/// optimality certificate. Infeasibility and unboundedness are reported
/// faithfully; numerical breakdown surfaces as an error instead.
pub fn lp_min(c: &DVector<f64>, p: &Polyhedron) -> Result<LpResult> {
    if c.len() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "objective length {} vs {} variables",
            c.len(),
            p.dim()
        )));
    }
    match simplex::solve_min(c, &p.g, &p.h, OPT_TOL)? {
        simplex::SimplexOutcome::Optimal { x, value } => {
            let viol = p.max_violation(&x);
            if viol > p.feas_tol() {
                return Err(Error::NumericalFailure(format!(
                    "simplex solution violates constraints by {viol:.3e}"
                )));
            }
            Ok(LpResult::Optimal { x, value })
        }
        simplex::SimplexOutcome::Infeasible => Ok(LpResult::Infeasible),
        simplex::SimplexOutcome::Unbounded => Ok(LpResult::Unbounded),
    }
}

/// Feasible point together with a certified inexactness bound for the
/// projection variational inequality.
#[derive(Clone, Debug)]
pub struct ProjResult {
    pub x_proj: DVector<f64>,
    /// Bound `delta >= 0` such that `<x_proj - y, x - x_proj> >= -delta`
    /// for every feasible `x` within the certified diameter.
    pub delta_cert: f64,
    /// False when no feasible-set diameter was supplied; `delta_cert` then
    /// simply restates the requested tolerance.
    pub certified: bool,
}

/// Projects `y` onto the polyhedron. `tol` is the accuracy budget the caller
/// is willing to accept for the variational inequality.
pub fn qp_project(y: &DVector<f64>, p: &Polyhedron, tol: f64) -> Result<ProjResult> {
    qp_project_with(y, p, tol, None)
}

/// As [`qp_project`], with an explicit bound on the feasible-set diameter so
/// the inexactness certificate can be evaluated from the KKT residuals:
/// `delta_cert = |x - y + G'mu| * diam + |mu'(Gx - h)|`.
pub fn qp_project_with(
    y: &DVector<f64>,
    p: &Polyhedron,
    tol: f64,
    diam_est: Option<f64>,
) -> Result<ProjResult> {
    if tol <= 0.0 {
        return Err(Error::InvalidParams(format!("tol must be > 0, got {tol}")));
    }
    if y.len() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point length {} vs {} variables",
            y.len(),
            p.dim()
        )));
    }
    let sol = match qp::project_onto(y, &p.g, &p.h, p.feas_tol()) {
        Ok(sol) => sol,
        Err(Error::Infeasible(_)) => {
            // distinguish genuine emptiness from active-set breakdown
            return match lp_min(&DVector::zeros(p.dim()), p)? {
                LpResult::Infeasible => Err(Error::Infeasible(
                    "projection target polyhedron is empty".into(),
                )),
                _ => Err(Error::NumericalFailure(
                    "projection active-set failed on a feasible system".into(),
                )),
            };
        }
        Err(e) => return Err(e),
    };

    let (delta_cert, certified) = match diam_est {
        Some(diam) if diam.is_finite() && diam >= 0.0 => {
            let stat = (&sol.x - y + p.g.transpose() * &sol.multipliers).norm();
            let comp = {
                let gx = &p.g * &sol.x;
                (0..p.rows())
                    .map(|i| sol.multipliers[i] * (gx[i] - p.h[i]))
                    .sum::<f64>()
                    .abs()
            };
            (stat * diam + comp, true)
        }
        _ => (tol, false),
    };

    Ok(ProjResult {
        x_proj: sol.x,
        delta_cert,
        certified,
    })
}

const SUBSET_GUARD: f64 = 1e6;

/// Hoffman condition constant of a full-row-rank `n x k` matrix: the largest
/// spectral norm of the inverse over all non-singular `n`-column submatrices.
pub fn chi_constant(z: &DMatrix<f64>) -> Result<f64> {
    let n = z.nrows();
    let k = z.ncols();
    if n == 0 || k < n {
        return Err(Error::RankDeficient);
    }
    let svd_full = z.clone().svd(false, false);
    let smax = svd_full.singular_values.max();
    let smin = svd_full.singular_values.min();
    if smin <= 1e-12 * smax.max(1.0) {
        return Err(Error::RankDeficient);
    }

    let subsets = binomial_f64(k, n);
    if subsets > SUBSET_GUARD {
        return Err(Error::EnumerationGuard {
            subsets,
            guard: SUBSET_GUARD,
        });
    }

    let mut chi: f64 = 0.0;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut sub = DMatrix::zeros(n, n);
    loop {
        for (c, &col) in idx.iter().enumerate() {
            sub.set_column(c, &z.column(col));
        }
        let svd = sub.clone().svd(false, false);
        let s_hi = svd.singular_values.max();
        let s_lo = svd.singular_values.min();
        if s_lo > 1e-12 * s_hi.max(1.0) {
            chi = chi.max(1.0 / s_lo);
        }
        // next lexicographic n-subset of {0..k}
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(chi);
            }
            i -= 1;
            if idx[i] != i + k - n {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial_f64(k: usize, n: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..n.min(k - n) {
        acc = acc * (k - i) as f64 / (i + 1) as f64;
        if acc > 1e12 {
            return acc;
        }
    }
    acc
}

/// Upper bound `chi * |(Gz - h)_+|_2` on the distance from `z` to the
/// polyhedron.
pub fn hoffman_bound(z: &DVector<f64>, p: &Polyhedron, chi: f64) -> Result<f64> {
    if z.len() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "point length {} vs {} variables",
            z.len(),
            p.dim()
        )));
    }
    if chi < 0.0 {
        return Err(Error::InvalidParams("chi must be >= 0".into()));
    }
    let gz = &p.g * z;
    let resid: f64 = (0..p.rows())
        .map(|i| (gz[i] - p.h[i]).max(0.0).powi(2))
        .sum();
    Ok(chi * resid.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{preset, Preset};

    fn example_21() -> Polyhedron {
        let ec = preset(&Preset::Example21, 2).unwrap();
        ordered_polyhedron(&ec, 0.0, None).unwrap()
    }

    #[test]
    fn monotone_cone_shape() {
        let ec = EigenConstraint::new(DMatrix::zeros(0, 3), DVector::zeros(0), 0.0).unwrap();
        let p = ordered_polyhedron(&ec, 0.0, None).unwrap();
        assert_eq!(p.rows(), 2);
        assert_eq!(p.dim(), 3);
        assert_eq!(p.h().amax(), 0.0);
        assert_eq!(p.g(), &difference_matrix(3));
    }

    #[test]
    fn example_21_rows() {
        let p = example_21();
        assert_eq!(p.rows(), 5); // 4 box rows + 1 ordering row
        let x = DVector::from_column_slice(&[4.0, 1.0]);
        assert!(p.contains(&x, 1e-12));
        let x = DVector::from_column_slice(&[2.0, 1.0]);
        assert!(!p.contains(&x, 1e-12));
    }

    #[test]
    fn box_rows_stack_after_ordering() {
        let ec = EigenConstraint::new(DMatrix::zeros(0, 2), DVector::zeros(0), 0.0).unwrap();
        let lo = DVector::from_column_slice(&[-1.0, -2.0]);
        let up = DVector::from_column_slice(&[3.0, 2.0]);
        let p = ordered_polyhedron(&ec, 0.0, Some((&lo, &up))).unwrap();
        assert_eq!(p.rows(), 1 + 4);
        assert!(p.contains(&DVector::from_column_slice(&[3.0, 2.0]), 1e-12));
        assert!(!p.contains(&DVector::from_column_slice(&[3.5, 2.0]), 1e-12));
    }

    #[test]
    fn lp_on_example_21() {
        let p = example_21();
        let c = DVector::from_column_slice(&[1.0, 1.0]);
        match lp_min(&c, &p).unwrap() {
            LpResult::Optimal { x, value } => {
                assert!((value - 3.0).abs() < 1e-9);
                assert!((x[0] - 3.0).abs() < 1e-9 && x[1].abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lp_unbounded_on_half_bounded_cone() {
        // descending cone with x2 >= 0; minimize -x1
        let ec = EigenConstraint::new(
            DMatrix::from_row_slice(1, 2, &[0.0, -1.0]),
            DVector::from_column_slice(&[0.0]),
            0.0,
        )
        .unwrap();
        let p = ordered_polyhedron(&ec, 0.0, None).unwrap();
        let c = DVector::from_column_slice(&[-1.0, 0.0]);
        assert!(matches!(lp_min(&c, &p).unwrap(), LpResult::Unbounded));
    }

    #[test]
    fn lp_infeasible_on_contradictory_bounds() {
        // x1 <= 0 and x1 >= 1
        let ec = EigenConstraint::new(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_column_slice(&[0.0, -1.0]),
            0.0,
        )
        .unwrap();
        let p = ordered_polyhedron(&ec, 0.0, None).unwrap();
        let c = DVector::from_column_slice(&[1.0]);
        assert!(matches!(lp_min(&c, &p).unwrap(), LpResult::Infeasible));
    }

    #[test]
    fn project_identity_inside() {
        let p = example_21();
        let y = DVector::from_column_slice(&[4.0, 1.0]);
        let r = qp_project(&y, &p, 1e-8).unwrap();
        assert!((r.x_proj - y).norm() < 1e-10);
    }

    #[test]
    fn project_clips_to_vertex() {
        let p = example_21();
        let y = DVector::from_column_slice(&[6.0, -1.0]);
        let r = qp_project(&y, &p, 1e-8).unwrap();
        assert!((r.x_proj[0] - 5.0).abs() < 1e-9);
        assert!(r.x_proj[1].abs() < 1e-9);
    }

    #[test]
    fn project_origin_hits_nearest_face() {
        let p = example_21();
        let y = DVector::zeros(2);
        let r = qp_project(&y, &p, 1e-8).unwrap();
        assert!((r.x_proj[0] - 3.0).abs() < 1e-9);
        assert!(r.x_proj[1].abs() < 1e-9);
    }

    #[test]
    fn project_on_empty_set_errors() {
        let ec = EigenConstraint::new(
            DMatrix::from_row_slice(2, 1, &[1.0, -1.0]),
            DVector::from_column_slice(&[0.0, -1.0]),
            0.0,
        )
        .unwrap();
        let p = ordered_polyhedron(&ec, 0.0, None).unwrap();
        let y = DVector::from_column_slice(&[0.3]);
        assert!(matches!(
            qp_project(&y, &p, 1e-8),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn chi_of_scalar_and_orthogonal() {
        let z = DMatrix::from_row_slice(1, 1, &[-1.0]);
        assert!((chi_constant(&z).unwrap() - 1.0).abs() < 1e-12);

        let z = DMatrix::identity(3, 3);
        assert!((chi_constant(&z).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_matches_direct_enumeration() {
        let z = DMatrix::from_row_slice(2, 3, &[-1.0, 0.0, -1.0, 0.0, -1.0, 1.0]);
        // submatrices: {0,1} inverse norm 1; {0,2} and {1,2} share the
        // singular spectrum of [[-1,-1],[0,1]]: smin^2 = (3 - sqrt(5))/2
        let smin = ((3.0 - 5.0f64.sqrt()) / 2.0).sqrt();
        let expect = 1.0 / smin;
        assert!((chi_constant(&z).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn chi_guards() {
        let z = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(chi_constant(&z), Err(Error::RankDeficient)));
        let z = DMatrix::from_fn(3, 300, |i, j| ((i + j) as f64).sin());
        assert!(matches!(
            chi_constant(&z),
            Err(Error::EnumerationGuard { .. }) | Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn hoffman_zero_on_feasible_and_exact_in_1d() {
        let p = example_21();
        let z = DVector::from_column_slice(&[4.0, 1.0]);
        assert_eq!(hoffman_bound(&z, &p, 3.0).unwrap(), 0.0);

        let ec = EigenConstraint::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DVector::from_column_slice(&[1.0]),
            0.0,
        )
        .unwrap();
        let p1 = ordered_polyhedron(&ec, 0.0, None).unwrap();
        let z = DVector::from_column_slice(&[2.0]);
        assert!((hoffman_bound(&z, &p1, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }
}
