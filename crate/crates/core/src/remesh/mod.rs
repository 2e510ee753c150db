//! Local anisotropic remeshing of triangle meshes toward unit edge lengths.
//!
//! [`adapt`] runs outer sweeps of edge splitting, edge collapsing, edge
//! swapping and vertex smoothing, each driven by edge lengths and element
//! quality measured in the prescribed metric. The operators are also exposed
//! individually on [`Remesher`].

mod ops;

use std::collections::HashMap;

use log::debug;

use crate::error::{invalid, Error, Result};
use crate::mesh::{quality::simplex_quality, SimplicialMesh};
use crate::metric::{edge_length, MetricField, MetricTensor};

pub use ops::metric_midpoint;

/// Operator thresholds of the remesher.
#[derive(Clone, Debug, PartialEq)]
pub struct RemeshParams {
    /// Edges longer than this (in the metric) are split.
    pub l_split: f64,
    /// Edges shorter than this (in the metric) are collapsed.
    pub l_collapse: f64,
    pub max_outer_sweeps: usize,
    /// Minimum relative improvement of the worst quality for a swap.
    pub swap_threshold: f64,
    pub smoothing_relaxation: f64,
    /// Cells (indices into the input mesh) that must come out untouched.
    pub frozen_cells: Vec<usize>,
}

impl Default for RemeshParams {
    fn default() -> Self {
        Self {
            l_split: std::f64::consts::SQRT_2,
            l_collapse: std::f64::consts::FRAC_1_SQRT_2,
            max_outer_sweeps: 10,
            swap_threshold: 1e-3,
            smoothing_relaxation: 1.0,
            frozen_cells: Vec::new(),
        }
    }
}

impl RemeshParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_collapse > 0.0 && self.l_collapse < 1.0 && 1.0 < self.l_split) {
            return invalid(format!(
                "need 0 < l_collapse < 1 < l_split, got {} and {}",
                self.l_collapse, self.l_split
            ));
        }
        if !(self.smoothing_relaxation > 0.0 && self.smoothing_relaxation <= 1.0) {
            return invalid("smoothing relaxation must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Edit counts and unit-edge fraction after one outer sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepReport {
    pub splits: usize,
    pub collapses: usize,
    pub swaps: usize,
    pub moves: usize,
    pub edges: usize,
    pub unit_fraction: f64,
}

impl SweepReport {
    pub fn edits(&self) -> usize {
        self.splits + self.collapses + self.swaps + self.moves
    }
}

/// Result of [`adapt`].
#[derive(Clone, Debug)]
pub struct Adapted {
    pub mesh: SimplicialMesh,
    /// Metric carried to the output vertices.
    pub metric: MetricField,
    /// Input index of each output vertex, `None` for inserted vertices.
    pub vertex_origin: Vec<Option<usize>>,
    /// Input index of each output cell that was never modified.
    pub cell_origin: Vec<Option<usize>>,
    pub sweeps: Vec<SweepReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    Interior,
    Boundary,
    Corner,
}

#[derive(Clone, Copy, Debug)]
struct BoundaryEdge {
    v: [usize; 2],
    marker: i32,
    alive: bool,
}

/// Mutable working state of the 2D remesher.
#[derive(Clone, Debug)]
pub struct Remesher {
    params: RemeshParams,
    pts: Vec<[f64; 2]>,
    metric: Vec<MetricTensor>,
    kind: Vec<Kind>,
    locked: Vec<bool>,
    valive: Vec<bool>,
    vorigin: Vec<Option<usize>>,
    tris: Vec<[usize; 3]>,
    talive: Vec<bool>,
    frozen: Vec<bool>,
    torigin: Vec<Option<usize>>,
    vtris: Vec<Vec<usize>>,
    bedges: Vec<BoundaryEdge>,
    bindex: HashMap<(usize, usize), usize>,
}

#[inline]
fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Remesher {
    pub fn new(mesh: &SimplicialMesh, metric: &MetricField, params: RemeshParams) -> Result<Self> {
        if mesh.dim() != 2 {
            return invalid(format!("the remesher handles 2D meshes only, got {}D", mesh.dim()));
        }
        params.validate()?;
        mesh.validate()?;
        if metric.len() != mesh.num_vertices() || metric.dim() != 2 {
            return Err(Error::CountMismatch {
                what: "metric values".into(),
                expected: mesh.num_vertices(),
                found: metric.len(),
            });
        }
        metric.check_spd()?;
        let nv = mesh.num_vertices();
        let nc = mesh.num_cells();
        let mut frozen = vec![false; nc];
        for &c in &params.frozen_cells {
            if c >= nc {
                return invalid(format!("frozen cell {c} out of range ({nc} cells)"));
            }
            frozen[c] = true;
        }
        let pts: Vec<[f64; 2]> = (0..nv).map(|v| [mesh.vertex(v)[0], mesh.vertex(v)[1]]).collect();
        let tris: Vec<[usize; 3]> = mesh.cells().map(|c| [c[0], c[1], c[2]]).collect();
        let mut vtris = vec![Vec::new(); nv];
        let mut locked = vec![false; nv];
        for (t, tri) in tris.iter().enumerate() {
            for &v in tri {
                vtris[v].push(t);
                locked[v] |= frozen[t];
            }
        }
        let mut bedges = Vec::with_capacity(mesh.num_facets());
        let mut bindex = HashMap::with_capacity(mesh.num_facets());
        let mut bcount = vec![0usize; nv];
        for f in 0..mesh.num_facets() {
            let e = mesh.facet(f);
            bindex.insert(key(e[0], e[1]), bedges.len());
            bedges.push(BoundaryEdge {
                v: [e[0], e[1]],
                marker: mesh.facet_marker(f),
                alive: true,
            });
            bcount[e[0]] += 1;
            bcount[e[1]] += 1;
        }
        let kind = (0..nv)
            .map(|v| {
                if mesh.is_corner(v) {
                    Kind::Corner
                } else if bcount[v] > 0 {
                    Kind::Boundary
                } else {
                    Kind::Interior
                }
            })
            .collect();
        let mut r = Self {
            params,
            pts,
            metric: metric.values().to_vec(),
            kind,
            locked,
            valive: vec![true; nv],
            vorigin: (0..nv).map(Some).collect(),
            tris,
            talive: vec![true; nc],
            frozen,
            torigin: (0..nc).map(Some).collect(),
            vtris,
            bedges,
            bindex,
        };
        r.promote_ridge_vertices();
        Ok(r)
    }

    /// Boundary vertices that do not lie on a straight run of a single
    /// marker cannot slide or be removed.
    fn promote_ridge_vertices(&mut self) {
        for v in 0..self.pts.len() {
            if self.kind[v] != Kind::Boundary {
                continue;
            }
            let nb = self.boundary_neighbors(v);
            let straight = match nb.as_slice() {
                [(a, ma), (b, mb)] if ma == mb => {
                    let (p, pa, pb) = (self.pts[v], self.pts[*a], self.pts[*b]);
                    let u = [pa[0] - p[0], pa[1] - p[1]];
                    let w = [pb[0] - p[0], pb[1] - p[1]];
                    let cross = u[0] * w[1] - u[1] * w[0];
                    let dot = u[0] * w[0] + u[1] * w[1];
                    dot < 0.0 && cross.abs() <= 1e-10 * u[0].hypot(u[1]) * w[0].hypot(w[1])
                }
                _ => false,
            };
            if !straight {
                self.kind[v] = Kind::Corner;
            }
        }
    }

    /// Boundary neighbors of `v` with the marker of the connecting edge.
    fn boundary_neighbors(&self, v: usize) -> Vec<(usize, i32)> {
        let mut out = Vec::with_capacity(2);
        for &t in &self.vtris[v] {
            let tri = self.tris[t];
            for &w in &tri {
                if w != v {
                    if let Some(&i) = self.bindex.get(&key(v, w)) {
                        if !out.iter().any(|&(x, _)| x == w) {
                            out.push((w, self.bedges[i].marker));
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn params(&self) -> &RemeshParams {
        &self.params
    }

    pub fn num_vertices(&self) -> usize {
        self.valive.iter().filter(|&&a| a).count()
    }

    pub fn num_cells(&self) -> usize {
        self.talive.iter().filter(|&&a| a).count()
    }

    /// Alive edges as sorted pairs in lexicographic order.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e = Vec::with_capacity(self.tris.len() * 2);
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.talive[t] {
                continue;
            }
            for i in 0..3 {
                let (a, b) = key(tri[i], tri[(i + 1) % 3]);
                e.push([a, b]);
            }
        }
        e.sort_unstable();
        e.dedup();
        e
    }

    #[inline]
    fn edge_vec(&self, a: usize, b: usize) -> [f64; 2] {
        [self.pts[b][0] - self.pts[a][0], self.pts[b][1] - self.pts[a][1]]
    }

    /// Metric length of edge `(a, b)`.
    #[inline]
    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        edge_length(&self.metric[a], &self.metric[b], &self.edge_vec(a, b))
    }

    /// Fraction of edges with metric length in `[l_collapse, l_split]`.
    pub fn unit_fraction(&self) -> f64 {
        let edges = self.edges();
        if edges.is_empty() {
            return 0.0;
        }
        let ok = edges
            .iter()
            .filter(|&&[a, b]| {
                let l = self.edge_length(a, b);
                l >= self.params.l_collapse && l <= self.params.l_split
            })
            .count();
        ok as f64 / edges.len() as f64
    }

    fn quality_of(&self, tri: [usize; 3], moved: Option<(usize, [f64; 2])>) -> f64 {
        let p = |v: usize| match moved {
            Some((m, q)) if m == v => [q[0], q[1], 0.0],
            _ => [self.pts[v][0], self.pts[v][1], 0.0],
        };
        let pts = [p(tri[0]), p(tri[1]), p(tri[2])];
        let ms = [&self.metric[tri[0]], &self.metric[tri[1]], &self.metric[tri[2]]];
        simplex_quality(2, &pts, &ms)
    }

    #[inline]
    fn tri_quality(&self, t: usize) -> f64 {
        self.quality_of(self.tris[t], None)
    }

    /// Alive triangles sharing edge `(a, b)`.
    fn edge_tris(&self, a: usize, b: usize) -> Vec<usize> {
        self.vtris[a]
            .iter()
            .copied()
            .filter(|&t| self.tris[t].contains(&b))
            .collect()
    }

    fn is_boundary_edge(&self, a: usize, b: usize) -> bool {
        self.bindex.contains_key(&key(a, b))
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.vtris[v]
            .iter()
            .flat_map(|&t| self.tris[t])
            .filter(|&w| w != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn set_tri(&mut self, t: usize, tri: [usize; 3]) {
        let old = self.tris[t];
        for &v in &old {
            if !tri.contains(&v) {
                self.vtris[v].retain(|&x| x != t);
            }
        }
        for &v in &tri {
            if !old.contains(&v) {
                self.vtris[v].push(t);
            }
        }
        self.tris[t] = tri;
        self.torigin[t] = None;
    }

    fn add_tri(&mut self, tri: [usize; 3]) -> usize {
        let t = self.tris.len();
        self.tris.push(tri);
        self.talive.push(true);
        self.frozen.push(false);
        self.torigin.push(None);
        for &v in &tri {
            self.vtris[v].push(t);
        }
        t
    }

    fn kill_tri(&mut self, t: usize) {
        for v in self.tris[t] {
            self.vtris[v].retain(|&x| x != t);
        }
        self.talive[t] = false;
        self.torigin[t] = None;
    }

    fn add_vertex(&mut self, p: [f64; 2], m: MetricTensor, kind: Kind) -> usize {
        self.pts.push(p);
        self.metric.push(m);
        self.kind.push(kind);
        self.locked.push(false);
        self.valive.push(true);
        self.vorigin.push(None);
        self.vtris.push(Vec::new());
        self.pts.len() - 1
    }

    fn add_boundary_edge(&mut self, a: usize, b: usize, marker: i32) {
        self.bindex.insert(key(a, b), self.bedges.len());
        self.bedges.push(BoundaryEdge {
            v: [a, b],
            marker,
            alive: true,
        });
    }

    fn replace_boundary_edge(&mut self, old: (usize, usize), a: usize, b: usize) {
        let i = self.bindex.remove(&key(old.0, old.1)).expect("boundary edge exists");
        self.bedges[i].v = [a, b];
        self.bindex.insert(key(a, b), i);
    }

    fn remove_boundary_edge(&mut self, a: usize, b: usize) {
        if let Some(i) = self.bindex.remove(&key(a, b)) {
            self.bedges[i].alive = false;
        }
    }

    /// Full consistency check: orientation, vertex-to-triangle incidence,
    /// boundary closure and frozen cells.
    pub fn check_validity(&self) -> Result<()> {
        let mut incidence = vec![Vec::new(); self.pts.len()];
        let mut open: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.talive[t] {
                continue;
            }
            if !(signed_area(&self.pts, tri) > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} {tri:?} is inverted or flat")));
            }
            if self.frozen[t] && self.torigin[t].is_none() {
                return Err(Error::InvalidMesh(format!("frozen triangle {t} was modified")));
            }
            for i in 0..3 {
                let v = tri[i];
                if !self.valive[v] {
                    return Err(Error::InvalidMesh(format!("triangle {t} uses removed vertex {v}")));
                }
                incidence[v].push(t);
                let k = key(tri[i], tri[(i + 1) % 3]);
                *open.entry(k).or_insert(0) += 1;
            }
        }
        for (v, inc) in incidence.iter_mut().enumerate() {
            let mut have = self.vtris[v].clone();
            have.sort_unstable();
            inc.sort_unstable();
            if *inc != have {
                return Err(Error::InvalidMesh(format!("stale incidence at vertex {v}")));
            }
            if self.valive[v] && inc.is_empty() {
                return Err(Error::IsolatedVertex(v));
            }
        }
        let mut exposed: Vec<(usize, usize)> = Vec::new();
        for (k, n) in open {
            match n {
                1 => exposed.push(k),
                2 => {}
                _ => return Err(Error::InvalidMesh(format!("edge {k:?} shared by {n} triangles"))),
            }
        }
        exposed.sort_unstable();
        let mut declared: Vec<(usize, usize)> = self
            .bedges
            .iter()
            .filter(|e| e.alive)
            .map(|e| key(e.v[0], e.v[1]))
            .collect();
        declared.sort_unstable();
        if exposed != declared {
            return Err(Error::InvalidMesh(format!(
                "boundary closure violated: {} exposed edges, {} declared",
                exposed.len(),
                declared.len()
            )));
        }
        Ok(())
    }

    /// Compacts the working state into a mesh and carried metric.
    pub fn finish(self) -> Result<Adapted> {
        let mut new_index = vec![usize::MAX; self.pts.len()];
        let mut coords = Vec::new();
        let mut metric = Vec::new();
        let mut corners = Vec::new();
        let mut vertex_origin = Vec::new();
        for v in 0..self.pts.len() {
            if self.valive[v] {
                new_index[v] = metric.len();
                coords.extend_from_slice(&self.pts[v]);
                metric.push(self.metric[v]);
                corners.push(self.kind[v] == Kind::Corner);
                vertex_origin.push(self.vorigin[v]);
            }
        }
        let mut cells = Vec::new();
        let mut cell_origin = Vec::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if self.talive[t] {
                cells.extend(tri.iter().map(|&v| new_index[v]));
                cell_origin.push(self.torigin[t]);
            }
        }
        let mut facets = Vec::new();
        let mut markers = Vec::new();
        for e in self.bedges.iter().filter(|e| e.alive) {
            facets.extend(e.v.iter().map(|&v| new_index[v]));
            markers.push(e.marker);
        }
        let mesh = SimplicialMesh::new(2, coords, cells, facets, markers)?.with_corners(corners)?;
        let metric = MetricField::new(&mesh, metric)?;
        Ok(Adapted {
            mesh,
            metric,
            vertex_origin,
            cell_origin,
            sweeps: Vec::new(),
        })
    }
}

pub(crate) fn signed_area(pts: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let (a, b, c) = (pts[tri[0]], pts[tri[1]], pts[tri[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Fraction of mesh edges whose metric length lies in `[lo, hi]`.
pub fn unit_edge_fraction(mesh: &SimplicialMesh, metric: &MetricField, lo: f64, hi: f64) -> f64 {
    let edges = mesh.edges();
    if edges.is_empty() {
        return 0.0;
    }
    let ok = edges
        .iter()
        .filter(|&&[a, b]| {
            let e: Vec<f64> = mesh.vertex(b).iter().zip(mesh.vertex(a)).map(|(x, y)| x - y).collect();
            let l = edge_length(&metric.values()[a], &metric.values()[b], &e);
            (lo..=hi).contains(&l)
        })
        .count();
    ok as f64 / edges.len() as f64
}

/// Adapts a 2D mesh to `metric`: outer sweeps of split (to a fixed point),
/// collapse, swap and smoothing, stopping early once a sweep edits fewer
/// than 0.5% of the edges.
pub fn adapt(mesh: &SimplicialMesh, metric: &MetricField, params: &RemeshParams) -> Result<Adapted> {
    let mut r = Remesher::new(mesh, metric, params.clone())?;
    let mut sweeps = Vec::new();
    for sweep in 0..params.max_outer_sweeps {
        let edges_before = r.edges().len();
        let mut report = SweepReport {
            splits: r.split_to_fixed_point(),
            ..Default::default()
        };
        debug_check(&r)?;
        report.collapses = r.collapse_short_edges();
        debug_check(&r)?;
        report.swaps = r.swap_edges();
        debug_check(&r)?;
        report.moves = r.smooth_vertices();
        debug_check(&r)?;
        report.edges = r.edges().len();
        report.unit_fraction = r.unit_fraction();
        debug!(
            "sweep {sweep}: {} splits, {} collapses, {} swaps, {} moves, {} edges, unit fraction {:.4}",
            report.splits, report.collapses, report.swaps, report.moves, report.edges, report.unit_fraction
        );
        sweeps.push(report);
        if (report.edits() as f64) < 0.005 * edges_before.max(report.edges) as f64 {
            break;
        }
    }
    let mut out = r.finish()?;
    out.sweeps = sweeps;
    Ok(out)
}

#[inline]
fn debug_check(r: &Remesher) -> Result<()> {
    if cfg!(debug_assertions) {
        r.check_validity()
    } else {
        Ok(())
    }
}
