//! P1 Lagrange finite elements for the Poisson problem `Δu = f`, `u = g` on
//! the boundary, with manufactured solutions, a CG + SSOR solver and L²
//! error evaluation.

mod assemble;
mod problem;
pub mod quadrature;
mod solver;
mod sparse;

pub use assemble::{assemble, element_stiffness, l2_error, stiffness_matrix, LinearSystem};
pub use problem::{manufactured_interface, manufactured_quadratic, PoissonProblem, ScalarFn};
pub use solver::{cg_solve, Preconditioner, SolveInfo, SolverOptions};
pub use sparse::CsrMatrix;
