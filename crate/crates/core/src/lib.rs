//! Mixed multiple orthogonal polynomials and their matrix-polynomial
//! Christoffel perturbations.
//!
//! The pipeline runs measures → moment matrix → Gauss–Borel factorization →
//! families `A`, `B` → Jordan-sampled values → `tau` determinants →
//! connection matrix and perturbed families. The [`oracle`] module factors
//! the perturbed moment matrix directly and serves as ground truth.

// NaN-aware threshold tests and index-heavy numeric loops
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod christoffel;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod gaussborel;
pub mod linalg;
pub mod matpoly;
pub mod measures;
pub mod mmop;
pub mod oracle;
pub mod poly;
pub mod spectral;
pub mod tolerances;

pub use error::{Error, Result};
pub use exec::Execution;
pub use matpoly::MatrixPolynomial;
pub use poly::Poly;
pub use tolerances::Tolerances;
