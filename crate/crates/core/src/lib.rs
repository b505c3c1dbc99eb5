//! Escaping saddle points of smooth non-convex functions over polyhedra.
//!
//! The feasible set is `S = {x | Ax <= b}` with a moderate number of linear
//! inequality constraints. Given (possibly stochastic) gradient access to an
//! `(L, rho)`-smooth objective, the crate searches for a point from which the
//! objective cannot be decreased by more than `delta` inside the feasible
//! ball of radius `r = cbrt(delta / rho)` — an approximate second-order
//! stationary point (SOSP) — by repeatedly escaping saddle points.
//!
//! One escape step works on a local quadratic model of the objective. For
//! every subset of constraints that could be active at the minimizer it
//! restricts the model to the affine subspace where those constraints hold
//! with equality, and solves the restricted trust-region-style problem by
//! three candidate routes: a linear-term descent, the interior critical
//! point, and boundary candidates obtained from the secular equation of the
//! diagonalized model.
//!
//! Module map:
//!
//! * [`polyhedron`] — feasible sets, activity tests, affine subspaces from
//!   constraint subsets, Dykstra projections.
//! * [`linalg`] — projected power iteration, Jacobi diagonalization, the
//!   secular equation solver, coordinate-wise medians.
//! * [`oracle`] — gradient oracles, variance-reduced gradient estimation and
//!   the perturbed quadratic model builder.
//! * [`corner`] — escape from a saddle in a corner of a linear cone for
//!   purely quadratic objectives.
//! * [`escape`] — the general escape step (model + subset enumeration +
//!   three-case subspace solver).
//! * [`driver`] — the outer loop iterating escape steps to a certificate.
//! * [`experiment`] — the graph-partition relaxation experiment under box
//!   constraints.

pub mod corner;
pub mod driver;
mod error;
pub mod escape;
pub mod experiment;
pub mod linalg;
pub mod oracle;
pub mod polyhedron;
pub mod rng;

pub use error::Error;
pub use escape::{CaseLabel, EscapeOutcome, Tolerances};
pub use oracle::{OracleBundle, QuadraticModel};
pub use polyhedron::{AffineSubspace, Polyhedron};
