//! Degrees of compactness for operators between finite-dimensional sequence
//! spaces.
//!
//! The crate computes approximation, Kolmogorov, Gelfand and symmetrized
//! approximation numbers of matrices acting between `ℓ_p` spaces with
//! `p ∈ {1, 2, ∞}`, reports every value as a certified `[lower, upper]`
//! bracket, and cross-checks the classical duality identities between an
//! operator and its adjoint. The [`schemes`] module adds generalized
//! approximation schemes, Q-compactness diagnostics on model operators and
//! the constructive weighted-shift decomposition.
//!
//! Module map:
//!
//! * [`linalg`] – dense matrices and the small direct solvers everything
//!   else is built on.
//! * [`spaces`] – normed spaces, vectors, operators, adjoints and operator
//!   norms.
//! * [`oracle`] – brute-force ground truth: one-sided Jacobi SVD, a dense
//!   simplex solver, vertex enumeration, exact polyhedral distances and the
//!   certifying subspace branch-and-bound.
//! * [`snumbers`] – the four s-number families, axiom and duality reports.
//! * [`schemes`] – approximation schemes and Q-compactness tooling.
//! * [`fixtures`] – regenerable regression fixtures.

pub mod fixtures;
pub mod linalg;
pub mod oracle;
pub mod report;
pub mod schemes;
pub mod snumbers;
pub mod spaces;

mod error;
mod rng;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use rng::seeded_rng;
pub use spaces::{adjoint, operator_norm, LinearOperator, NormBracket, NormExp, NormedSpace, Vector};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exact-path tolerance.
pub const TOL: f64 = 1e-9;

/// Largest `ℓ∞` dimension whose `2^dim` sign vertices are enumerated.
pub const VERTEX_CAP: usize = 16;

/// Largest dimension accepted anywhere in the crate.
pub const MAX_DIM: usize = 64;
