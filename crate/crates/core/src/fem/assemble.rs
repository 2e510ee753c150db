use rayon::prelude::*;

use super::problem::PoissonProblem;
use super::quadrature;
use super::solver::{cg_solve, SolveInfo, SolverOptions};
use super::sparse::CsrMatrix;
use crate::error::{invalid, Error, Result};
use crate::mesh::SimplicialMesh;
use crate::recovery::ScalarField;

/// Local P1 stiffness matrix `∫_K ∇φ_i·∇φ_j` of cell `c`.
pub fn element_stiffness(mesh: &SimplicialMesh, c: usize) -> [[f64; 4]; 4] {
    let (g, vol) = mesh.barycentric_gradients(c);
    let n = mesh.dim() + 1;
    let mut k = [[0.0; 4]; 4];
    for i in 0..n {
        for j in 0..n {
            k[i][j] = vol * (0..3).map(|r| g[i][r] * g[j][r]).sum::<f64>();
        }
    }
    k
}

/// Global stiffness matrix over all vertices, without boundary conditions.
pub fn stiffness_matrix(mesh: &SimplicialMesh) -> Result<CsrMatrix> {
    let n = mesh.dim() + 1;
    let mut triplets = Vec::with_capacity(mesh.num_cells() * n * n);
    for c in 0..mesh.num_cells() {
        let k = element_stiffness(mesh, c);
        let cell = mesh.cell(c);
        for i in 0..n {
            for j in 0..n {
                triplets.push((cell[i], cell[j], k[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.num_vertices(), &triplets)
}

/// Reduced system over the free (interior) vertices after eliminating the
/// Dirichlet boundary values.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Free-dof index of each vertex, `None` on the boundary.
    pub dof: Vec<Option<usize>>,
    /// Boundary values on Dirichlet vertices, zero elsewhere.
    pub lifting: Vec<f64>,
}

impl LinearSystem {
    pub fn num_free(&self) -> usize {
        self.matrix.n()
    }

    /// Scatters a reduced solution back to all vertices.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.dof
            .iter()
            .zip(&self.lifting)
            .map(|(d, &g)| d.map_or(g, |i| x[i]))
            .collect()
    }

    pub fn solve(&self, mesh: &SimplicialMesh, opts: &SolverOptions) -> Result<(ScalarField, SolveInfo)> {
        let (x, info) = cg_solve(&self.matrix, &self.rhs, opts)?;
        Ok((ScalarField::new(mesh, self.expand(&x))?, info))
    }
}

/// Assembles `-Δu = -f` with P1 elements; the load uses a degree-4 rule.
pub fn assemble(mesh: &SimplicialMesh, problem: &PoissonProblem) -> Result<LinearSystem> {
    let d = mesh.dim();
    if problem.dim != d {
        return invalid(format!("problem is {}-dimensional, mesh is {d}-dimensional", problem.dim));
    }
    let nv = mesh.num_vertices();
    let mut on_boundary = vec![false; nv];
    for f in mesh.exposed_facets() {
        for v in f {
            on_boundary[v] = true;
        }
    }
    let mut dof = vec![None; nv];
    let mut lifting = vec![0.0; nv];
    let mut nfree = 0;
    for v in 0..nv {
        if on_boundary[v] {
            lifting[v] = (problem.boundary)(mesh.vertex(v));
        } else {
            dof[v] = Some(nfree);
            nfree += 1;
        }
    }
    for v in 0..nv {
        mesh.vertex_star(v).and_then(|s| if s.is_empty() { Err(Error::IsolatedVertex(v)) } else { Ok(()) })?;
    }

    let rule = quadrature::rule(d);
    let n = d + 1;
    let local: Vec<([[f64; 4]; 4], [f64; 4])> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let k = element_stiffness(mesh, c);
            let p = mesh.cell_points(c);
            let vol = mesh.cell_measure(c);
            let mut load = [0.0; 4];
            let mut x = [0.0; 3];
            for (lam, w) in rule.points.iter().zip(&rule.weights) {
                x.iter_mut().for_each(|xi| *xi = 0.0);
                for i in 0..n {
                    for r in 0..d {
                        x[r] += lam[i] * p[i][r];
                    }
                }
                let f = (problem.forcing)(&x[..d]);
                for i in 0..n {
                    load[i] -= w * vol * f * lam[i];
                }
            }
            (k, load)
        })
        .collect();

    let mut triplets = Vec::with_capacity(mesh.num_cells() * n * n);
    let mut rhs = vec![0.0; nfree];
    for (c, (k, load)) in local.iter().enumerate() {
        let cell = mesh.cell(c);
        for i in 0..n {
            let Some(row) = dof[cell[i]] else { continue };
            rhs[row] += load[i];
            for j in 0..n {
                match dof[cell[j]] {
                    Some(col) => triplets.push((row, col, k[i][j])),
                    None => rhs[row] -= k[i][j] * lifting[cell[j]],
                }
            }
        }
    }
    Ok(LinearSystem { matrix: CsrMatrix::from_triplets(nfree, &triplets)?, rhs, dof, lifting })
}

/// `‖u_h − u‖_{L²}` with the degree-4 rule on every cell.
pub fn l2_error(mesh: &SimplicialMesh, uh: &ScalarField, exact: impl Fn(&[f64]) -> f64 + Sync) -> Result<f64> {
    if uh.values().len() != mesh.num_vertices() {
        return Err(Error::CountMismatch {
            what: "field values".into(),
            expected: mesh.num_vertices(),
            found: uh.values().len(),
        });
    }
    let d = mesh.dim();
    let rule = quadrature::rule(d);
    let vals = uh.values();
    let parts: Vec<f64> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let p = mesh.cell_points(c);
            let cell = mesh.cell(c);
            let vol = mesh.cell_measure(c);
            let mut s = 0.0;
            for (lam, w) in rule.points.iter().zip(&rule.weights) {
                let mut x = [0.0; 3];
                let mut u = 0.0;
                for i in 0..=d {
                    u += lam[i] * vals[cell[i]];
                    for r in 0..d {
                        x[r] += lam[i] * p[i][r];
                    }
                }
                let e = u - exact(&x[..d]);
                s += w * e * e;
            }
            s * vol
        })
        .collect();
    Ok(parts.iter().sum::<f64>().sqrt())
}
