//! Clément-type gradient and Hessian recovery from P1 fields.

use crate::error::{Error, Result};
use crate::mesh::SimplicialMesh;
use crate::metric::{gradate, lp_normalize, MetricField, MetricTensor};
use crate::options::AdaptOptions;

/// P1 scalar field, one value per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(mesh: &SimplicialMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::CountMismatch {
                what: "scalar field values".into(),
                expected: mesh.num_vertices(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at vertex {v}")));
        }
        Ok(Self { values })
    }

    /// Vertex interpolant of `f`.
    pub fn interpolate(mesh: &SimplicialMesh, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::new(mesh, (0..mesh.num_vertices()).map(|v| f(mesh.vertex(v))).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// P1 vector field, one d-vector per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    dim: usize,
    values: Vec<[f64; 3]>,
}

impl VectorField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k]).collect()
    }
}

fn check_stars(mesh: &SimplicialMesh) -> Result<()> {
    for v in 0..mesh.num_vertices() {
        if mesh.vertex_star(v)?.is_empty() {
            return Err(Error::IsolatedVertex(v));
        }
    }
    Ok(())
}

/// Measure-weighted average over each vertex star of the cellwise
/// gradients of the P1 interpolant of `values`.
fn star_average_gradient(mesh: &SimplicialMesh, values: &[f64]) -> Vec<[f64; 3]> {
    let d = mesh.dim();
    let cell_grads: Vec<([f64; 3], f64)> = (0..mesh.num_cells())
        .map(|c| {
            let (g, vol) = mesh.barycentric_gradients(c);
            let mut out = [0.0; 3];
            for (i, &v) in mesh.cell(c).iter().enumerate() {
                for k in 0..d {
                    out[k] += values[v] * g[i][k];
                }
            }
            (out, vol)
        })
        .collect();
    (0..mesh.num_vertices())
        .map(|v| {
            let mut acc = [0.0; 3];
            let mut weight = 0.0;
            for &c in mesh.vertex_star(v).expect("vertex in range") {
                let (g, vol) = &cell_grads[c];
                for k in 0..d {
                    acc[k] += vol * g[k];
                }
                weight += vol;
            }
            acc.iter_mut().for_each(|x| *x /= weight);
            acc
        })
        .collect()
}

pub fn clement_gradient(mesh: &SimplicialMesh, u: &ScalarField) -> Result<VectorField> {
    check_stars(mesh)?;
    if u.values.len() != mesh.num_vertices() {
        return Err(Error::CountMismatch {
            what: "scalar field values".into(),
            expected: mesh.num_vertices(),
            found: u.values.len(),
        });
    }
    Ok(VectorField {
        dim: mesh.dim(),
        values: star_average_gradient(mesh, &u.values),
    })
}

/// Hessian by two successive star-averaged gradient recoveries, symmetrized.
/// The result may be indefinite.
pub fn recover_hessian(mesh: &SimplicialMesh, u: &ScalarField) -> Result<MetricField> {
    let grad = clement_gradient(mesh, u)?;
    let d = mesh.dim();
    let second: Vec<Vec<[f64; 3]>> = (0..d)
        .map(|k| star_average_gradient(mesh, &grad.component(k)))
        .collect();
    let values = (0..mesh.num_vertices())
        .map(|v| {
            let mut a = [[0.0; 3]; 3];
            for i in 0..d {
                for j in 0..d {
                    // Row i: derivative of ∂u/∂x_i.
                    a[i][j] = second[i][v][j];
                }
            }
            for i in 0..d {
                for j in 0..i {
                    let s = 0.5 * (a[i][j] + a[j][i]);
                    a[i][j] = s;
                    a[j][i] = s;
                }
            }
            MetricTensor::from_matrix(d, &a)
        })
        .collect();
    MetricField::new(mesh, values)
}

/// Smallest eigenvalue kept in the Hessian before normalization, relative to
/// the largest one over the field.
pub const HESSIAN_RELATIVE_FLOOR: f64 = 1e-12;

/// Eigenvalue modulus of every vertex Hessian, floored at
/// [`HESSIAN_RELATIVE_FLOOR`] times the largest modulus in the field so
/// that the result is SPD. Size bounds are not applied.
pub fn hessian_modulus(hessian: &MetricField) -> MetricField {
    let largest = hessian
        .values()
        .iter()
        .map(|m| m.eigen().values().iter().fold(0.0f64, |a, l| a.max(l.abs())))
        .fold(0.0f64, f64::max);
    let floor = if largest > 0.0 { HESSIAN_RELATIVE_FLOOR * largest } else { 1.0 };
    hessian.map(|m| m.enforce_spd_bounds(floor, f64::INFINITY, None))
}

/// Hessian-based adaptation metric: recovery, eigenvalue modulus, L^p
/// normalization to the target complexity with the size bounds, then
/// gradation and a final clamp.
pub fn hessian_metric(mesh: &SimplicialMesh, u: &ScalarField, opts: &AdaptOptions) -> Result<MetricField> {
    opts.validate()?;
    let hessian = hessian_modulus(&recover_hessian(mesh, u)?);
    let normalized = lp_normalize(mesh, &hessian, opts)?;
    let graded = gradate(mesh, &normalized, opts.gradation)?;
    Ok(graded.enforce_spd(opts))
}
