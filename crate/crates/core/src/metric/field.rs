use super::MetricTensor;
use crate::error::{invalid, Error, Result};
use crate::mesh::SimplicialMesh;
use crate::options::AdaptOptions;

pub const GRADATION_TOL: f64 = 1e-3;
pub const GRADATION_MAX_SWEEPS: usize = 20;

/// P1 tensor field: one tensor per mesh vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    dim: usize,
    values: Vec<MetricTensor>,
}

impl MetricField {
    pub fn new(mesh: &SimplicialMesh, values: Vec<MetricTensor>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return Err(Error::CountMismatch {
                what: "metric values".into(),
                expected: mesh.num_vertices(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().position(|m| m.dim() != mesh.dim()) {
            return invalid(format!(
                "metric at vertex {v} is {}D on a {}D mesh",
                values[v].dim(),
                mesh.dim()
            ));
        }
        Ok(Self {
            dim: mesh.dim(),
            values,
        })
    }

    pub fn uniform(mesh: &SimplicialMesh, h: f64) -> Result<Self> {
        let m = MetricTensor::uniform(mesh.dim(), h)?;
        Ok(Self {
            dim: mesh.dim(),
            values: vec![m; mesh.num_vertices()],
        })
    }

    pub fn constant(mesh: &SimplicialMesh, m: MetricTensor) -> Result<Self> {
        Self::new(mesh, vec![m; mesh.num_vertices()])
    }

    /// Samples `f` at every vertex.
    pub fn from_fn(mesh: &SimplicialMesh, f: impl Fn(&[f64]) -> MetricTensor) -> Result<Self> {
        Self::new(mesh, (0..mesh.num_vertices()).map(|v| f(mesh.vertex(v))).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[MetricTensor] {
        &self.values
    }

    pub fn into_values(self) -> Vec<MetricTensor> {
        self.values
    }

    pub fn map(&self, f: impl Fn(&MetricTensor) -> MetricTensor) -> Self {
        Self {
            dim: self.dim,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn enforce_spd(&self, opts: &AdaptOptions) -> Self {
        self.map(|m| m.enforce_spd(opts))
    }

    pub(crate) fn check_spd(&self) -> Result<()> {
        match self.values.iter().position(|m| !m.is_spd()) {
            Some(v) => invalid(format!("metric at vertex {v} is not SPD: {:?}", self.values[v])),
            None => Ok(()),
        }
    }

    fn check_mesh(&self, mesh: &SimplicialMesh) -> Result<()> {
        if self.values.len() != mesh.num_vertices() || self.dim != mesh.dim() {
            return Err(Error::CountMismatch {
                what: "metric values".into(),
                expected: mesh.num_vertices(),
                found: self.values.len(),
            });
        }
        Ok(())
    }
}

/// `Σ_K |K| · mean_{v∈K} g(M_v)`.
fn cell_average_integral(mesh: &SimplicialMesh, vertex_values: &[f64]) -> f64 {
    let k = (mesh.dim() + 1) as f64;
    (0..mesh.num_cells())
        .map(|c| {
            let s: f64 = mesh.cell(c).iter().map(|&v| vertex_values[v]).sum();
            mesh.cell_measure(c) * s / k
        })
        .sum()
}

/// Metric complexity `∫ sqrt(det M)`, vertex-averaged on each cell.
pub fn complexity(mesh: &SimplicialMesh, field: &MetricField) -> f64 {
    if mesh.num_cells() == 0 {
        return 0.0;
    }
    let roots: Vec<f64> = field.values.iter().map(|m| m.det().max(0.0).sqrt()).collect();
    cell_average_integral(mesh, &roots)
}

/// L^p normalization to complexity `N` without the final size clamp.
pub fn lp_scale(mesh: &SimplicialMesh, field: &MetricField, opts: &AdaptOptions) -> Result<MetricField> {
    field.check_mesh(mesh)?;
    field.check_spd()?;
    if !(opts.target_complexity > 0.0) {
        return invalid(format!("target complexity must be positive, got {}", opts.target_complexity));
    }
    let d = mesh.dim() as f64;
    let dets: Vec<f64> = field.values.iter().map(|m| m.det()).collect();
    let integrand: Vec<f64> = dets.iter().map(|&det| det.powf(opts.p.integral_exponent(mesh.dim()))).collect();
    let integral = cell_average_integral(mesh, &integrand);
    if !(integral > 0.0) {
        return invalid("metric integral vanishes on an empty mesh");
    }
    let global = opts.target_complexity.powf(2.0 / d) * integral.powf(-2.0 / d);
    let local_exp = opts.p.det_exponent(mesh.dim());
    let values = field
        .values
        .iter()
        .zip(&dets)
        .map(|(m, &det)| m.scale(global * det.powf(local_exp)))
        .collect();
    Ok(MetricField {
        dim: field.dim,
        values,
    })
}

/// L^p normalization to complexity `N`, followed by the size clamp of
/// [`MetricTensor::enforce_spd`].
pub fn lp_normalize(mesh: &SimplicialMesh, field: &MetricField, opts: &AdaptOptions) -> Result<MetricField> {
    Ok(lp_scale(mesh, field, opts)?.enforce_spd(opts))
}

/// Limits the size growth between neighboring vertices to a factor `beta`
/// per unit metric length, by repeated edge sweeps of metric intersection
/// with the grown neighbor metric.
pub fn gradate(mesh: &SimplicialMesh, field: &MetricField, beta: f64) -> Result<MetricField> {
    if !(beta > 1.0) {
        return invalid(format!("gradation factor must exceed 1, got {beta}"));
    }
    field.check_mesh(mesh)?;
    field.check_spd()?;
    let ln_beta = beta.ln();
    let dim = mesh.dim();
    let mut values = field.values.clone();
    let grow = |m: &MetricTensor, e: &[f64]| {
        let l = m.length(e);
        let f = 1.0 + l * ln_beta;
        m.scale(1.0 / (f * f))
    };
    for _ in 0..GRADATION_MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for &[u, v] in mesh.edges() {
            let mut e = [0.0; 3];
            for (k, ek) in e.iter_mut().enumerate().take(dim) {
                *ek = mesh.vertex(v)[k] - mesh.vertex(u)[k];
            }
            let e = &e[..dim];
            for (src, dst) in [(u, v), (v, u)] {
                let grown = grow(&values[src], e);
                if values[dst].dominates(&grown) {
                    continue;
                }
                let candidate = values[dst].intersect(&grown)?;
                max_change = max_change.max(relative_change(&values[dst], &candidate));
                values[dst] = candidate;
            }
        }
        if max_change < GRADATION_TOL {
            break;
        }
    }
    Ok(MetricField {
        dim: field.dim,
        values,
    })
}

fn relative_change(old: &MetricTensor, new: &MetricTensor) -> f64 {
    let diff = old
        .lower()
        .iter()
        .zip(new.lower())
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    diff / old.max_abs().max(f64::MIN_POSITIVE)
}
