//! Numerical kernels behind the escape algorithms: projected power
//! iteration, symmetric diagonalization to tolerance, the secular equation
//! solver for boundary candidates, and coordinate-wise medians.

mod jacobi;
mod median;
mod power;
pub(crate) mod qr;
mod secular;

pub use jacobi::{jacobi_diagonalize, Diagonalization};
pub use median::coordinate_median;
pub use power::{iteration_count, projected_power_iteration};
pub use secular::{candidate_point, default_root_tol, secular_solve};
