//! Generalized singular value decomposition of a matrix pair `(A, B)`
//! through the two augmented symmetric-definite pencils
//!
//! ```text
//! Hat:   ([[0, A], [A^T, 0]], blockdiag(I, B^T B))
//! Tilde: ([[0, B], [B^T, 0]], blockdiag(I, A^T A))
//! ```
//!
//! together with a reference GSVD, recovery of the GSVD components from
//! computed eigenpairs, first-order perturbation bounds, Krylov condition
//! estimators and the experiment harness used by the `gsvdlab` CLI.

pub mod augmented;
pub mod bounds;
pub mod condest;
pub mod eigensolve;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod oracle;
pub mod problems;
pub mod recovery;

pub use augmented::{build_hat, build_tilde, AugmentedPencil, ExactEigenStructure, Formulation};
pub use eigensolve::{perturb_pencil, select_eigenpairs, solve_pencil, GenEigenpair, PerturbationSpec, Target};
pub use error::{Error, Result};
pub use metrics::{chordal, sin_angle, AccuracyReport};
pub use oracle::{gsvd_reference, GsvdFactors};
pub use problems::{gen_random_pair, MatrixPair};
pub use recovery::{recover_all, RecoveredComponent};
