//! Matrix optimization under general linear inequality constraints on the
//! eigenvalues of a symmetric decision matrix.
//!
//! The feasible sets have the form `{X symmetric : A lambda(X) <= b}` with
//! `lambda(X)` the eigenvalues in descending order. They are non-convex in
//! general, yet two subproblems admit exact global solutions through a
//! single eigendecomposition plus a small convex program in eigenvalue
//! space:
//!
//! - [`solvers::solve_linear`] minimizes `<C, X>` globally (LP in eigenvalue
//!   space),
//! - [`solvers::project_spectral`] computes the exact Euclidean projection
//!   (QP in eigenvalue space).
//!
//! On top of these, [`solvers::pgm`] (projected gradient with inexact
//! projections) and [`solvers::fw`] (a Frank-Wolfe variant with a trust box
//! on the eigenvalues) compute first-order stationary points of smooth,
//! possibly non-convex objectives. [`applications`] contains the
//! preconditioner-design and quadratic-equation experiment pipelines built
//! on those solvers.

// Validation guards use `!(x > 0.0)` on purpose: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod constraints;
pub mod error;
pub mod polyhedra;
pub mod rng;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
