//! Certified elements of the Clarke generalized Jacobian for functions of the
//! form `F = G − H`, where every component of `G` and `H` is a pointwise
//! maximum of finitely many C¹ functions.
//!
//! The crate is organised bottom-up:
//!
//! - [`expr`]: formulas for the smooth pieces, with forward-mode gradients.
//! - [`dcmax`]: the `F = G − H` model, active index sets and directional
//!   derivatives.
//! - [`jacobian`]: lexicographic gradient selection producing `ξ ∈ ∂F(x)`,
//!   plus the difference-vector set, witness direction and the verifiers built
//!   on them.
//! - [`oracle`]: brute-force limiting Jacobians and convex hull membership,
//!   used to check `ξ` independently.
//! - [`newton`]: a semismooth Newton solver driven by `ξ`.
//! - [`instances`]: seeded generators for random piecewise-affine problems.
//! - [`report`]: every check on one point, bundled into a JSON report.

pub mod dcmax;
mod error;
pub mod expr;
pub mod instances;
pub mod jacobian;
mod linalg;
pub mod newton;
pub mod oracle;
pub mod report;

pub use dcmax::{ActiveSet, DcMaxFn, MaxFn, Tolerances};
pub use error::{Error, Result};
pub use expr::{Expr, SmoothFn};
pub use jacobian::{algorithm_a1, Convention, JacobianElement, SelectionResult};
pub use linalg::Matrix;
