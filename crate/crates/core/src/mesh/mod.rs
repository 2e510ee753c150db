//! Simplicial meshes: storage, adjacency and star queries, structured
//! generators, shape statistics and file I/O.

mod medit;
pub(crate) mod quality;
mod structured;
mod vtk;

use std::collections::HashMap;
use std::sync::OnceLock;

pub use medit::{read_medit, read_sol, write_medit, write_sol};
pub use quality::{aspect_ratio, quality, statistics, MeshStatistics, STATS_CSV_HEADER};
pub use structured::structured_mesh;
pub use vtk::{write_vtk, VtkField};

use crate::error::{Error, Result};

/// Sentinel for "no neighbor" in [`SimplicialMesh::cell_neighbors`].
pub const NO_NEIGHBOR: usize = usize::MAX;

/// Conforming simplicial mesh of triangles (d = 2) or tetrahedra (d = 3).
///
/// Geometry and connectivity are flat index arrays; adjacency is derived on
/// first use and cached until the next mutation.
#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    facets: Vec<usize>,
    facet_markers: Vec<i32>,
    corners: Vec<bool>,
    adjacency: OnceLock<Adjacency>,
}

#[derive(Clone, Debug)]
struct Adjacency {
    star_offsets: Vec<usize>,
    stars: Vec<usize>,
    neighbors: Vec<usize>,
    edges: Vec<[usize; 2]>,
}

impl PartialEq for SimplicialMesh {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.coords == other.coords
            && self.cells == other.cells
            && self.facets == other.facets
            && self.facet_markers == other.facet_markers
            && self.corners == other.corners
    }
}

impl SimplicialMesh {
    /// Builds a mesh from flat arrays. Cells with negative signed measure are
    /// reoriented; zero-measure cells are rejected.
    pub fn new(
        dim: usize,
        coords: Vec<f64>,
        mut cells: Vec<usize>,
        facets: Vec<usize>,
        facet_markers: Vec<i32>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidMesh(format!("unsupported dimension {dim}")));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidMesh("coordinate array length not a multiple of the dimension".into()));
        }
        if cells.len() % (dim + 1) != 0 || facets.len() % dim != 0 {
            return Err(Error::InvalidMesh("connectivity array length mismatch".into()));
        }
        if facet_markers.len() != facets.len() / dim {
            return Err(Error::CountMismatch {
                what: "facet markers".into(),
                expected: facets.len() / dim,
                found: facet_markers.len(),
            });
        }
        let nv = coords.len() / dim;
        if let Some(&bad) = cells.iter().chain(&facets).find(|&&v| v >= nv) {
            return Err(Error::InvalidMesh(format!("vertex index {bad} out of range ({nv} vertices)")));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let nc = cells.len() / (dim + 1);
        for c in 0..nc {
            let cell = &mut cells[c * (dim + 1)..(c + 1) * (dim + 1)];
            let m = signed_measure(dim, &coords, cell);
            if m == 0.0 {
                return Err(Error::DegenerateCell(c));
            }
            if m < 0.0 {
                cell.swap(0, 1);
            }
        }
        Ok(Self {
            dim,
            coords,
            cells,
            facets,
            facet_markers,
            corners: vec![false; nv],
            adjacency: OnceLock::new(),
        })
    }

    pub fn with_corners(mut self, corners: Vec<bool>) -> Result<Self> {
        if corners.len() != self.num_vertices() {
            return Err(Error::CountMismatch {
                what: "corner flags".into(),
                expected: self.num_vertices(),
                found: corners.len(),
            });
        }
        self.corners = corners;
        Ok(self)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    #[inline]
    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    #[inline]
    pub fn num_facets(&self) -> usize {
        self.facet_markers.len()
    }

    #[inline]
    pub fn vertex(&self, v: usize) -> &[f64] {
        &self.coords[v * self.dim..(v + 1) * self.dim]
    }

    #[inline]
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    #[inline]
    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    #[inline]
    pub fn facet_marker(&self, f: usize) -> i32 {
        self.facet_markers[f]
    }

    #[inline]
    pub fn is_corner(&self, v: usize) -> bool {
        self.corners[v]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn cells(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn corners(&self) -> &[bool] {
        &self.corners
    }

    /// Signed measure (area or volume) of cell `c`; positive for valid cells.
    pub fn cell_measure(&self, c: usize) -> f64 {
        signed_measure(self.dim, &self.coords, self.cell(c))
    }

    pub fn cell_points(&self, c: usize) -> [[f64; 3]; 4] {
        let mut p = [[0.0; 3]; 4];
        for (k, &v) in self.cell(c).iter().enumerate() {
            p[k][..self.dim].copy_from_slice(self.vertex(v));
        }
        p
    }

    pub fn barycenter(&self, c: usize) -> [f64; 3] {
        let mut b = [0.0; 3];
        let cell = self.cell(c);
        for &v in cell {
            for (bi, x) in b.iter_mut().zip(self.vertex(v)) {
                *bi += x;
            }
        }
        let n = cell.len() as f64;
        b.iter_mut().for_each(|x| *x /= n);
        b
    }

    /// Gradients of the barycentric coordinates of cell `c` (one per local
    /// vertex) and the cell measure.
    pub fn barycentric_gradients(&self, c: usize) -> ([[f64; 3]; 4], f64) {
        let p = self.cell_points(c);
        let d = self.dim;
        let mut j = [[0.0; 3]; 3];
        for (col, q) in p[1..=d].iter().enumerate() {
            for r in 0..d {
                j[r][col] = q[r] - p[0][r];
            }
        }
        let mut inv = [[0.0; 3]; 3];
        let det = if d == 2 {
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            inv[0][0] = j[1][1] / det;
            inv[0][1] = -j[0][1] / det;
            inv[1][0] = -j[1][0] / det;
            inv[1][1] = j[0][0] / det;
            det
        } else {
            let cof = |r: usize, c: usize| {
                let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
                let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                j[r1][c1] * j[r2][c2] - j[r1][c2] * j[r2][c1]
            };
            let det = j[0][0] * cof(0, 0) + j[0][1] * cof(0, 1) + j[0][2] * cof(0, 2);
            for r in 0..3 {
                for c in 0..3 {
                    inv[r][c] = cof(c, r) / det;
                }
            }
            det
        };
        let mut grads = [[0.0; 3]; 4];
        for i in 0..d {
            grads[i + 1] = inv[i];
            for k in 0..d {
                grads[0][k] -= inv[i][k];
            }
        }
        let fact = if d == 2 { 2.0 } else { 6.0 };
        (grads, det / fact)
    }

    fn adjacency(&self) -> &Adjacency {
        self.adjacency.get_or_init(|| Adjacency::build(self))
    }

    /// Cells containing vertex `v`, in increasing order.
    pub fn vertex_star(&self, v: usize) -> Result<&[usize]> {
        if v >= self.num_vertices() {
            return Err(Error::InvalidArgument(format!(
                "vertex {v} out of range ({} vertices)",
                self.num_vertices()
            )));
        }
        let adj = self.adjacency();
        Ok(&adj.stars[adj.star_offsets[v]..adj.star_offsets[v + 1]])
    }

    /// Face neighbors of cell `c`; entry `i` is the cell across the facet
    /// opposite local vertex `i`, or [`NO_NEIGHBOR`].
    pub fn cell_neighbors(&self, c: usize) -> &[usize] {
        &self.adjacency().neighbors[c * (self.dim + 1)..(c + 1) * (self.dim + 1)]
    }

    /// Unique edges as sorted vertex pairs, in lexicographic order.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.adjacency().edges
    }

    /// Facets incident to exactly one cell, each sorted ascending.
    pub fn exposed_facets(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for c in 0..self.num_cells() {
            for (i, &n) in self.cell_neighbors(c).iter().enumerate() {
                if n == NO_NEIGHBOR {
                    let mut f = facet_opposite(self.cell(c), i);
                    f.sort_unstable();
                    out.push(f);
                }
            }
        }
        out.sort();
        out
    }

    /// Checks orientation, facet closure and that every vertex is used.
    pub fn validate(&self) -> Result<()> {
        for c in 0..self.num_cells() {
            if !(self.cell_measure(c) > 0.0) {
                return Err(Error::InvalidMesh(format!("cell {c} has non-positive measure")));
            }
        }
        let exposed = self.exposed_facets();
        let mut declared: Vec<Vec<usize>> = (0..self.num_facets())
            .map(|f| {
                let mut v = self.facet(f).to_vec();
                v.sort_unstable();
                v
            })
            .collect();
        declared.sort();
        if declared != exposed {
            let missing = exposed.iter().filter(|f| declared.binary_search(f).is_err()).count();
            let extra = declared.iter().filter(|f| exposed.binary_search(f).is_err()).count();
            return Err(Error::InvalidMesh(format!(
                "boundary facets do not match exposed facets ({missing} undeclared, {extra} spurious)"
            )));
        }
        let adj = self.adjacency();
        if let Some(v) = (0..self.num_vertices()).find(|&v| adj.star_offsets[v] == adj.star_offsets[v + 1]) {
            return Err(Error::IsolatedVertex(v));
        }
        Ok(())
    }

    /// Flags 2D boundary vertices where the boundary turns or the marker
    /// changes, in addition to corners already flagged.
    pub fn detect_corners(&mut self) {
        if self.dim != 2 {
            return;
        }
        let nv = self.num_vertices();
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for f in 0..self.num_facets() {
            for &v in self.facet(f) {
                incident[v].push(f);
            }
        }
        for (v, fs) in incident.iter().enumerate() {
            if fs.is_empty() {
                continue;
            }
            if fs.len() != 2 || self.facet_markers[fs[0]] != self.facet_markers[fs[1]] {
                self.corners[v] = true;
                continue;
            }
            let other = |f: usize| {
                let e = self.facet(f);
                if e[0] == v {
                    e[1]
                } else {
                    e[0]
                }
            };
            let p = self.vertex(v);
            let a = self.vertex(other(fs[0]));
            let b = self.vertex(other(fs[1]));
            let u = [a[0] - p[0], a[1] - p[1]];
            let w = [b[0] - p[0], b[1] - p[1]];
            let cross = u[0] * w[1] - u[1] * w[0];
            let scale = (u[0].hypot(u[1])) * (w[0].hypot(w[1]));
            if cross.abs() > 1e-10 * scale {
                self.corners[v] = true;
            }
        }
    }
}

impl Adjacency {
    fn build(mesh: &SimplicialMesh) -> Self {
        let nv = mesh.num_vertices();
        let nc = mesh.num_cells();
        let k = mesh.dim + 1;
        let mut counts = vec![0usize; nv + 1];
        for &v in &mesh.cells {
            counts[v + 1] += 1;
        }
        for i in 0..nv {
            counts[i + 1] += counts[i];
        }
        let star_offsets = counts.clone();
        let mut fill = counts;
        let mut stars = vec![0; mesh.cells.len()];
        for c in 0..nc {
            for &v in mesh.cell(c) {
                stars[fill[v]] = c;
                fill[v] += 1;
            }
        }

        let mut neighbors = vec![NO_NEIGHBOR; nc * k];
        let mut open: HashMap<Vec<usize>, (usize, usize)> = HashMap::with_capacity(nc * k / 2);
        for c in 0..nc {
            for i in 0..k {
                let mut f = facet_opposite(mesh.cell(c), i);
                f.sort_unstable();
                match open.remove(&f) {
                    Some((c2, i2)) => {
                        neighbors[c * k + i] = c2;
                        neighbors[c2 * k + i2] = c;
                    }
                    None => {
                        open.insert(f, (c, i));
                    }
                }
            }
        }

        let mut edges = Vec::with_capacity(nc * 3);
        for cell in mesh.cells.chunks_exact(k) {
            for a in 0..k {
                for b in a + 1..k {
                    let (u, v) = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                    edges.push([u, v]);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        Self {
            star_offsets,
            stars,
            neighbors,
            edges,
        }
    }
}

pub(crate) fn facet_opposite(cell: &[usize], i: usize) -> Vec<usize> {
    cell.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .collect()
}

pub(crate) fn signed_measure(dim: usize, coords: &[f64], cell: &[usize]) -> f64 {
    let p = |v: usize, k: usize| coords[v * dim + k];
    if dim == 2 {
        let (a, b, c) = (cell[0], cell[1], cell[2]);
        0.5 * ((p(b, 0) - p(a, 0)) * (p(c, 1) - p(a, 1)) - (p(c, 0) - p(a, 0)) * (p(b, 1) - p(a, 1)))
    } else {
        let o = cell[0];
        let e = |v: usize| [p(v, 0) - p(o, 0), p(v, 1) - p(o, 1), p(v, 2) - p(o, 2)];
        let (a, b, c) = (e(cell[1]), e(cell[2]), e(cell[3]));
        (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0]))
            / 6.0
    }
}
