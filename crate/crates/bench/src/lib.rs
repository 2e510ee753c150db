//! Shared fixtures for the pipeline benchmarks.

use anisomesh::{structured_mesh, PoissonProblem, ScalarField, SimplicialMesh};

/// Structured unit square with `n` subdivisions per side and the interface
/// solution interpolated at its vertices.
pub fn interface_fixture(n: usize) -> (SimplicialMesh, ScalarField) {
    let mesh = structured_mesh(2, n).expect("valid subdivision count");
    let problem = PoissonProblem::interface_default(2);
    let exact = problem.exact.expect("interface problem has an exact solution");
    let u = ScalarField::interpolate(&mesh, |x| exact(x)).expect("finite values");
    (mesh, u)
}
