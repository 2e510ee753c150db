use super::SimplicialMesh;
use crate::metric::{MetricField, MetricTensor};

pub const STATS_CSV_HEADER: &str = "elements,vertices,ar_max,ar_mean,ar_std,frac_ar_gt2,measure_min,measure_max";

/// Shape statistics of a mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStatistics {
    pub element_count: usize,
    pub vertex_count: usize,
    pub ar_max: f64,
    pub ar_mean: f64,
    pub ar_std: f64,
    pub measure_min: f64,
    pub measure_max: f64,
    pub frac_ar_gt2: f64,
}

impl MeshStatistics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:e},{:e}",
            self.element_count,
            self.vertex_count,
            self.ar_max,
            self.ar_mean,
            self.ar_std,
            self.frac_ar_gt2,
            self.measure_min,
            self.measure_max
        )
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Circumradius over `d` times the inradius; 1 for the regular simplex and
/// `+inf` for degenerate cells.
pub fn aspect_ratio(mesh: &SimplicialMesh, cell: usize) -> f64 {
    let p = mesh.cell_points(cell);
    if mesh.dim() == 2 {
        triangle_aspect_ratio(&p[0], &p[1], &p[2])
    } else {
        tetra_aspect_ratio(&p)
    }
}

pub(crate) fn triangle_aspect_ratio(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let (la, lb, lc) = (dist(b, c), dist(a, c), dist(a, b));
    let area = 0.5 * norm(&cross(&sub(b, a), &sub(c, a)));
    if !(area > 0.0) {
        return f64::INFINITY;
    }
    let circum = la * lb * lc / (4.0 * area);
    let inr = area / (0.5 * (la + lb + lc));
    circum / (2.0 * inr)
}

fn tetra_aspect_ratio(p: &[[f64; 3]; 4]) -> f64 {
    let a = sub(&p[1], &p[0]);
    let b = sub(&p[2], &p[0]);
    let c = sub(&p[3], &p[0]);
    let det = dot(&a, &cross(&b, &c));
    let volume = det.abs() / 6.0;
    if !(volume > 0.0) {
        return f64::INFINITY;
    }
    // Circumcenter offset from p0: (|a|² b×c + |b|² c×a + |c|² a×b) / (2 a·(b×c)).
    let (bc, ca, ab) = (cross(&b, &c), cross(&c, &a), cross(&a, &b));
    let (na, nb, nc) = (dot(&a, &a), dot(&b, &b), dot(&c, &c));
    let num = [
        na * bc[0] + nb * ca[0] + nc * ab[0],
        na * bc[1] + nb * ca[1] + nc * ab[1],
        na * bc[2] + nb * ca[2] + nc * ab[2],
    ];
    let circum = norm(&num) / (2.0 * det.abs());
    let faces = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    let surface: f64 = faces
        .iter()
        .map(|f| 0.5 * norm(&cross(&sub(&p[f[1]], &p[f[0]]), &sub(&p[f[2]], &p[f[0]]))))
        .sum();
    let inr = 3.0 * volume / surface;
    circum / (3.0 * inr)
}

/// Metric shape quality of a simplex, 1 for a unit equilateral element
/// under the vertex-averaged metric and larger for worse shapes.
///
/// 2D: `Σ ℓ² / (4√3 |K|_M)`; 3D: `(Σ ℓ²)^{3/2} / (72√3 |K|_M)`, with
/// `|K|_M = sqrt(det M̄) |K|`. Non-positive measure gives `+inf`.
pub fn simplex_quality(dim: usize, points: &[[f64; 3]], metrics: &[&MetricTensor]) -> f64 {
    let k = dim + 1;
    let mean = MetricTensor::weighted_sum(metrics.iter().map(|m| (1.0 / k as f64, *m))).expect("non-empty cell");
    let measure = if dim == 2 {
        let (a, b, c) = (&points[0], &points[1], &points[2]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    } else {
        let a = sub(&points[1], &points[0]);
        dot(&a, &cross(&sub(&points[2], &points[0]), &sub(&points[3], &points[0]))) / 6.0
    };
    if !(measure > 0.0) {
        return f64::INFINITY;
    }
    let mut sum_sq = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let e = sub(&points[j], &points[i]);
            sum_sq += mean.quad_form(&e[..dim]);
        }
    }
    let det = mean.det();
    if !(det > 0.0) {
        return f64::INFINITY;
    }
    let metric_measure = det.sqrt() * measure;
    if dim == 2 {
        sum_sq / (4.0 * 3f64.sqrt() * metric_measure)
    } else {
        sum_sq.powf(1.5) / (72.0 * 3f64.sqrt() * metric_measure)
    }
}

pub fn quality(mesh: &SimplicialMesh, metric: &MetricField, cell: usize) -> f64 {
    let p = mesh.cell_points(cell);
    let ms: Vec<&MetricTensor> = mesh.cell(cell).iter().map(|&v| &metric.values()[v]).collect();
    simplex_quality(mesh.dim(), &p[..mesh.dim() + 1], &ms)
}

pub fn statistics(mesh: &SimplicialMesh) -> MeshStatistics {
    let n = mesh.num_cells();
    let mut ar_max = 0.0f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut gt2 = 0usize;
    let mut measure_min = f64::INFINITY;
    let mut measure_max = 0.0f64;
    for c in 0..n {
        let ar = aspect_ratio(mesh, c);
        ar_max = ar_max.max(ar);
        sum += ar;
        sum_sq += ar * ar;
        if ar > 2.0 {
            gt2 += 1;
        }
        let m = mesh.cell_measure(c);
        measure_min = measure_min.min(m);
        measure_max = measure_max.max(m);
    }
    let nf = n.max(1) as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    MeshStatistics {
        element_count: n,
        vertex_count: mesh.num_vertices(),
        ar_max,
        ar_mean: mean,
        ar_std: var.sqrt(),
        measure_min,
        measure_max,
        frac_ar_gt2: gt2 as f64 / nf,
    }
}
