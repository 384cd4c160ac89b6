//! Hessian adaptive trust-region (HAT) optimization.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense symmetric linear algebra.
//! - [`objectives`]: problems with analytic oracles, finite-difference
//!   cross-checks and a LIBSVM reader.
//! - [`bregman`]: scaling functions and their Bregman divergences.
//! - [`estimators`]: Hessian approximations (exact, quasi-Newton, diagonal,
//!   Gauss-Newton) and lazy/compressed wrappers.
//! - [`subproblem`]: trust-region Bregman model solvers and KKT certificates.
//! - [`hat`]: the optimizer, its parameter schedule and iteration-count audits.
//! - [`baselines`]: gradient descent and damped Newton comparators.
//! - [`audit`]: relative-inexactness studies, Gauss-Newton bound checks and
//!   trace reports.
//! - [`trace`]: the persisted trace schema (CSV rows plus JSON metadata).

// Checks are written as `!(a <= b)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod baselines;
pub mod bregman;
pub mod error;
pub mod estimators;
pub mod hat;
pub mod numerics;
pub mod objectives;
pub mod rng;
pub mod subproblem;
pub mod trace;

pub use error::{HatError, Result};
pub use numerics::{DenseVector, SymmetricMatrix};
