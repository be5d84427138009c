//! Shared instance generators and sampling oracles for the integration and
//! acceptance suites. Everything is seeded; nothing reads the clock.

use nalgebra::DVector;
use rand::Rng;

use eigopt::constraints::{preset, EigenConstraint, Preset};
use eigopt::polyhedra::{ordered_polyhedron, sampling, Polyhedron};
use eigopt::rng::random_orthogonal;
use eigopt::spectral::SymMatrix;

/// A generated constraint instance with a known convexity verdict for test
/// routing.
#[allow(dead_code)] // fields used by different test targets
pub struct EcInstance {
    pub ec: EigenConstraint,
    pub convex: bool,
    pub label: &'static str,
}

/// Rotates through bounded constraint families (every instance intersects a
/// box, so linear objectives stay bounded), mixing convex and non-convex
/// sets. `n >= 2` expected.
pub fn bounded_instance<R: Rng>(rng: &mut R, n: usize, which: usize) -> EcInstance {
    match which % 5 {
        0 => {
            let l = -1.0 + rng.random::<f64>();
            let u = l + 0.5 + rng.random::<f64>();
            EcInstance {
                ec: preset(&Preset::EigBox { lower: l, upper: u }, n).unwrap(),
                convex: true,
                label: "eig_box",
            }
        }
        1 => {
            let delta = 0.05 + 0.4 * rng.random::<f64>();
            let cap = preset(
                &Preset::EigBox {
                    lower: -0.5,
                    upper: 1.0 + rng.random::<f64>(),
                },
                n,
            )
            .unwrap();
            let relax = preset(&Preset::RankRelax { k: 1, delta }, n).unwrap();
            EcInstance {
                ec: relax.concat(&cap).unwrap(),
                convex: false,
                label: "rank_relax+box",
            }
        }
        2 => {
            let kappa = 2.0 + 20.0 * rng.random::<f64>();
            let cond = preset(&Preset::CondNumber { kappa }, n).unwrap();
            let cap = preset(
                &Preset::EigBox {
                    lower: 0.05,
                    upper: 1.0,
                },
                n,
            )
            .unwrap();
            EcInstance {
                ec: cond.concat(&cap).unwrap(),
                convex: true,
                label: "cond+box",
            }
        }
        3 => {
            let m = 1 + rng.random_range(0..n);
            let rows = preset(&Preset::M3 { m }, n).unwrap();
            let cap = preset(
                &Preset::EigBox {
                    lower: -1.0,
                    upper: 0.9,
                },
                n,
            )
            .unwrap();
            EcInstance {
                ec: rows.concat(&cap).unwrap(),
                convex: true,
                label: "m3+box",
            }
        }
        _ => {
            if n == 2 {
                EcInstance {
                    ec: preset(&Preset::Example21, 2).unwrap(),
                    convex: false,
                    label: "example_21",
                }
            } else {
                let psd = preset(&Preset::Psd, n).unwrap();
                let cap = preset(
                    &Preset::EigBox {
                        lower: -0.5,
                        upper: 2.0,
                    },
                    n,
                )
                .unwrap();
                EcInstance {
                    ec: psd.concat(&cap).unwrap(),
                    convex: true,
                    label: "psd+box",
                }
            }
        }
    }
}

/// Feasible eigenvalue vectors drawn by hit-and-run from an interior point.
pub fn sample_lambdas<R: Rng>(
    ec: &EigenConstraint,
    count: usize,
    rng: &mut R,
) -> (Polyhedron, Vec<DVector<f64>>) {
    let poly = ordered_polyhedron(ec, ec.eps(), None).unwrap();
    let (start, radius) = sampling::interior_point(&poly).unwrap();
    assert!(
        radius > 1e-9,
        "instance without interior cannot be sampled"
    );
    let pts = sampling::hit_and_run(&poly, &start, 50.0, 4, count, rng).unwrap();
    (poly, pts)
}

/// Feasible matrices `Q diag(lambda) Q'` with Haar-random bases.
#[allow(dead_code)]
pub fn sample_matrices<R: Rng>(
    ec: &EigenConstraint,
    count: usize,
    rng: &mut R,
) -> Vec<SymMatrix> {
    let (_, lambdas) = sample_lambdas(ec, count, rng);
    lambdas
        .into_iter()
        .map(|lam| {
            let n = lam.len();
            let q = random_orthogonal(rng, n);
            let m = &q * nalgebra::DMatrix::from_diagonal(&lam) * q.transpose();
            SymMatrix::new(m).expect("constructed symmetric")
        })
        .collect()
}

/// Brute-force LP oracle: evaluates every vertex (intersection of `n` rows)
/// of a bounded polyhedron. Only usable at tiny sizes.
#[allow(dead_code)] // each test target compiles its own copy of this module
pub fn lp_by_vertex_enumeration(
    c: &DVector<f64>,
    poly: &Polyhedron,
) -> Option<(DVector<f64>, f64)> {
    let n = poly.dim();
    let k = poly.rows();
    let rows: Vec<usize> = (0..k).collect();
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut idx = vec![0usize; n];
    subsets(&rows, n, &mut idx, 0, 0, &mut |subset| {
        let mut a = nalgebra::DMatrix::zeros(n, n);
        let mut b = DVector::zeros(n);
        for (r, &row) in subset.iter().enumerate() {
            for j in 0..n {
                a[(r, j)] = poly.g()[(row, j)];
            }
            b[r] = poly.h()[row];
        }
        if let Some(x) = a.lu().solve(&b) {
            if x.iter().all(|v| v.is_finite()) && poly.max_violation(&x) <= 1e-7 {
                let val = c.dot(&x);
                if best.as_ref().is_none_or(|(_, v)| val < *v) {
                    best = Some((x, val));
                }
            }
        }
    });
    best
}

#[allow(dead_code)]
fn subsets(
    items: &[usize],
    size: usize,
    idx: &mut Vec<usize>,
    depth: usize,
    start: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if depth == size {
        f(&idx[..size]);
        return;
    }
    for i in start..items.len() {
        idx[depth] = items[i];
        subsets(items, size, idx, depth + 1, i + 1, f);
    }
}
