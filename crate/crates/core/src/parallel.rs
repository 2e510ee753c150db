//! Partitioned adaptation: split the mesh into parts, adapt each part with
//! its interface cells frozen, merge, and repeat with shifted interfaces.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::{Hash, Hasher};

use log::{debug, info};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::mesh::{SimplicialMesh, NO_NEIGHBOR};
use crate::metric::{MetricField, MetricTensor};
use crate::options::AdaptOptions;
use crate::remesh::{adapt, Adapted, RemeshParams, SweepReport};

/// Marker of facets cut by a partition interface inside a submesh.
pub const INTERFACE_MARKER: i32 = i32::MIN;

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "ANISOMESH_THREADS";

/// One part of a cell partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub id: usize,
    /// Owned cells, ascending.
    pub cells: Vec<usize>,
    /// Cells of other parts sharing a vertex with this part, ascending.
    pub ghost: Vec<usize>,
    /// Owned cells with a face neighbor in another part, ascending.
    pub interface: Vec<usize>,
}

/// Recursive coordinate bisection of cell barycenters into `np` parts.
///
/// The cut axis cycles from `axis_seed mod d`, and the first cut is moved
/// off the median for larger seeds, so successive seeds move interfaces.
pub fn partition(mesh: &SimplicialMesh, np: usize, axis_seed: u64) -> Result<Vec<Partition>> {
    let nc = mesh.num_cells();
    if np == 0 || np > nc {
        return invalid(format!("cannot split {nc} cells into {np} parts"));
    }
    let d = mesh.dim();
    let centers: Vec<[f64; 3]> = (0..nc).map(|c| mesh.barycenter(c)).collect();
    let rotation = (axis_seed / d as u64) as usize;
    let shift = match rotation {
        0 => 0.0,
        r if r % 2 == 1 => 0.08,
        _ => -0.08,
    };
    let mut owner = vec![0usize; nc];
    let mut stack = vec![((0..nc).collect::<Vec<_>>(), 0usize, np, 0usize)];
    while let Some((mut cells, first, count, depth)) = stack.pop() {
        if count == 1 {
            for c in cells {
                owner[c] = first;
            }
            continue;
        }
        let axis = (axis_seed as usize + depth) % d;
        cells.sort_by(|&a, &b| centers[a][axis].total_cmp(&centers[b][axis]).then(a.cmp(&b)));
        let left = count / 2;
        let mut q = left as f64 / count as f64;
        if depth == 0 {
            q *= 1.0 + shift;
        }
        let cut = ((q * cells.len() as f64).round() as usize).clamp(left, cells.len() - (count - left));
        let right = cells.split_off(cut);
        stack.push((right, first + left, count - left, depth + 1));
        stack.push((cells, first, left, depth + 1));
    }
    Ok(build_parts(mesh, &owner, np))
}

fn build_parts(mesh: &SimplicialMesh, owner: &[usize], np: usize) -> Vec<Partition> {
    let mut parts: Vec<Partition> = (0..np)
        .map(|id| Partition { id, cells: Vec::new(), ghost: Vec::new(), interface: Vec::new() })
        .collect();
    for (c, &p) in owner.iter().enumerate() {
        parts[p].cells.push(c);
        if mesh.cell_neighbors(c).iter().any(|&n| n != NO_NEIGHBOR && owner[n] != p) {
            parts[p].interface.push(c);
        }
    }
    for part in &mut parts {
        let mut ghost = HashSet::new();
        for &c in &part.cells {
            for &v in mesh.cell(c) {
                let star = mesh.vertex_star(v).expect("vertex of a cell");
                ghost.extend(star.iter().copied().filter(|&n| owner[n] != part.id));
            }
        }
        part.ghost = ghost.into_iter().collect();
        part.ghost.sort_unstable();
    }
    parts
}

/// A part extracted as a standalone mesh.
#[derive(Clone, Debug)]
pub struct SubMesh {
    pub part: usize,
    pub mesh: SimplicialMesh,
    pub metric: MetricField,
    /// Global index of each local vertex.
    pub vertex_global: Vec<usize>,
    /// Global index of each local cell.
    pub cell_global: Vec<usize>,
    /// Local indices of the interface cells.
    pub frozen: Vec<usize>,
}

/// Builds the submesh of `part`: its owned cells, domain boundary facets
/// with their markers, and cut facets marked [`INTERFACE_MARKER`].
pub fn extract(mesh: &SimplicialMesh, metric: &MetricField, part: &Partition) -> Result<SubMesh> {
    let d = mesh.dim();
    let mut declared: HashMap<Vec<usize>, (&[usize], i32)> = HashMap::with_capacity(mesh.num_facets());
    for f in 0..mesh.num_facets() {
        let mut key = mesh.facet(f).to_vec();
        key.sort_unstable();
        declared.insert(key, (mesh.facet(f), mesh.facet_marker(f)));
    }
    let owned: HashSet<usize> = part.cells.iter().copied().collect();
    let mut vertex_global: Vec<usize> = part.cells.iter().flat_map(|&c| mesh.cell(c).iter().copied()).collect();
    vertex_global.sort_unstable();
    vertex_global.dedup();
    let local: HashMap<usize, usize> = vertex_global.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let coords = vertex_global.iter().flat_map(|&g| mesh.vertex(g).iter().copied()).collect();
    let cells = part.cells.iter().flat_map(|&c| mesh.cell(c).iter().map(|v| local[v])).collect();
    let mut facets = Vec::new();
    let mut facet_markers = Vec::new();
    for &c in &part.cells {
        let cell = mesh.cell(c);
        for (i, &n) in mesh.cell_neighbors(c).iter().enumerate() {
            if n != NO_NEIGHBOR && owned.contains(&n) {
                continue;
            }
            let mut facet: Vec<usize> = (0..=d).filter(|&j| j != i).map(|j| cell[j]).collect();
            let marker = if n == NO_NEIGHBOR {
                let mut key = facet.clone();
                key.sort_unstable();
                let (orig, marker) = declared
                    .get(&key)
                    .ok_or_else(|| Error::InvalidMesh(format!("exposed facet {key:?} is not declared")))?;
                facet = orig.to_vec();
                *marker
            } else {
                INTERFACE_MARKER
            };
            facets.extend(facet.iter().map(|v| local[v]));
            facet_markers.push(marker);
        }
    }
    let corners = vertex_global.iter().map(|&g| mesh.is_corner(g)).collect();
    let sub = SimplicialMesh::new(d, coords, cells, facets, facet_markers)?.with_corners(corners)?;
    let values = vertex_global.iter().map(|&g| metric.values()[g]).collect();
    let metric = MetricField::new(&sub, values)?;
    let position: HashMap<usize, usize> = part.cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let frozen = part.interface.iter().map(|c| position[c]).collect();
    Ok(SubMesh { part: part.id, mesh: sub, metric, vertex_global, cell_global: part.cells.clone(), frozen })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum VertexKey {
    Original(usize),
    New { part: usize, index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum CellKey {
    Original(usize),
    New { part: usize, index: usize },
}

/// Reassembles adapted parts into one mesh. Original vertices come first in
/// global order, then new vertices by part; unchanged cells come first in
/// global order, then new cells by part.
pub fn merge(parts: &[(SubMesh, Adapted)]) -> Result<(SimplicialMesh, MetricField)> {
    let Some(first) = parts.first() else {
        return Err(Error::Merge("no parts to merge".into()));
    };
    let d = first.0.mesh.dim();
    let mut vertices: BTreeMap<VertexKey, (&[f64], MetricTensor, bool)> = BTreeMap::new();
    let mut conflicts = Vec::new();
    let mut keys: Vec<Vec<VertexKey>> = Vec::with_capacity(parts.len());
    for (sub, out) in parts {
        let mut part_keys = Vec::with_capacity(out.mesh.num_vertices());
        for (k, origin) in out.vertex_origin.iter().enumerate() {
            let (key, corner) = match origin {
                Some(j) => (VertexKey::Original(sub.vertex_global[*j]), sub.mesh.is_corner(*j)),
                None => (VertexKey::New { part: sub.part, index: k }, false),
            };
            let entry = (out.mesh.vertex(k), out.metric.values()[k], corner);
            if let Some(prev) = vertices.insert(key, entry) {
                if prev.0 != entry.0 {
                    conflicts.push(key);
                }
            }
            part_keys.push(key);
        }
        keys.push(part_keys);
    }
    if !conflicts.is_empty() {
        return Err(Error::Merge(format!("shared vertices moved during adaptation: {conflicts:?}")));
    }
    let index: HashMap<VertexKey, usize> = vertices.keys().enumerate().map(|(i, &k)| (k, i)).collect();

    let mut cells: Vec<(CellKey, Vec<usize>)> = Vec::new();
    let mut facets: BTreeMap<Vec<usize>, (Vec<usize>, i32)> = BTreeMap::new();
    let mut cut: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for ((sub, out), part_keys) in parts.iter().zip(&keys) {
        if out.mesh.dim() != d {
            return Err(Error::Merge(format!("part {} has dimension {}", sub.part, out.mesh.dim())));
        }
        for (k, origin) in out.cell_origin.iter().enumerate() {
            let key = match origin {
                Some(j) => CellKey::Original(sub.cell_global[*j]),
                None => CellKey::New { part: sub.part, index: k },
            };
            cells.push((key, out.mesh.cell(k).iter().map(|&v| index[&part_keys[v]]).collect()));
        }
        for f in 0..out.mesh.num_facets() {
            let facet: Vec<usize> = out.mesh.facet(f).iter().map(|&v| index[&part_keys[v]]).collect();
            let mut sorted = facet.clone();
            sorted.sort_unstable();
            let marker = out.mesh.facet_marker(f);
            if marker == INTERFACE_MARKER {
                *cut.entry(sorted).or_insert(0) += 1;
            } else {
                facets.insert(sorted, (facet, marker));
            }
        }
    }
    let unmatched: Vec<&Vec<usize>> = cut.iter().filter(|(_, &n)| n != 2).map(|(f, _)| f).collect();
    if !unmatched.is_empty() {
        return Err(Error::Merge(format!("interface facets not shared by exactly two parts: {unmatched:?}")));
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0));
    let coords = vertices.values().flat_map(|v| v.0.iter().copied()).collect();
    let corners = vertices.values().map(|v| v.2).collect();
    let mesh = SimplicialMesh::new(
        d,
        coords,
        cells.into_iter().flat_map(|c| c.1).collect(),
        facets.values().flat_map(|f| f.0.iter().copied()).collect(),
        facets.values().map(|f| f.1).collect(),
    )?
    .with_corners(corners)?;
    mesh.validate().map_err(|e| Error::Merge(format!("merged mesh is invalid: {e}")))?;
    let metric = MetricField::new(&mesh, vertices.values().map(|v| v.1).collect())?;
    Ok((mesh, metric))
}

/// Hash of a cell's vertex coordinates, in local vertex order.
pub fn cell_fingerprint(mesh: &SimplicialMesh, c: usize) -> u64 {
    let mut h = DefaultHasher::new();
    for &v in mesh.cell(c) {
        for x in mesh.vertex(v) {
            x.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Summary of one repartition-adapt iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    pub axis_seed: u64,
    pub part_cells: Vec<usize>,
    pub interface_cells: usize,
    /// Interface cells whose fingerprint was found unchanged after merging.
    pub frozen_verified: usize,
    pub sweeps: Vec<Vec<SweepReport>>,
}

#[derive(Clone, Debug)]
pub struct ParallelAdapted {
    pub mesh: SimplicialMesh,
    pub metric: MetricField,
    pub iterations: Vec<IterationReport>,
}

/// Worker count: `ANISOMESH_THREADS` if set, else the available parallelism.
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Repartition-adapt iterations with `opts.num_parts` parts, using a pool
/// sized by [`thread_cap`].
pub fn parallel_adapt(mesh: &SimplicialMesh, metric: &MetricField, opts: &AdaptOptions) -> Result<ParallelAdapted> {
    parallel_adapt_with_threads(mesh, metric, opts, thread_cap())
}

/// As [`parallel_adapt`] with an explicit pool size. The result does not
/// depend on `threads`.
pub fn parallel_adapt_with_threads(
    mesh: &SimplicialMesh,
    metric: &MetricField,
    opts: &AdaptOptions,
    threads: usize,
) -> Result<ParallelAdapted> {
    opts.validate()?;
    let np = opts.num_parts;
    if np == 1 {
        let out = adapt(mesh, metric, &RemeshParams::default())?;
        let report = IterationReport {
            axis_seed: opts.seed,
            part_cells: vec![out.mesh.num_cells()],
            interface_cells: 0,
            frozen_verified: 0,
            sweeps: vec![out.sweeps],
        };
        return Ok(ParallelAdapted { mesh: out.mesh, metric: out.metric, iterations: vec![report] });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.clamp(1, np))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    let mut current = (mesh.clone(), metric.clone());
    let mut iterations = Vec::with_capacity(opts.parallel_iters);
    for iter in 0..opts.parallel_iters {
        let (m, f) = &current;
        let axis_seed = opts.seed + iter as u64;
        let parts = partition(m, np, axis_seed)?;
        let subs = parts.iter().map(|p| extract(m, f, p)).collect::<Result<Vec<_>>>()?;
        let adapted: Vec<Adapted> = pool.install(|| {
            subs.par_iter()
                .map(|s| {
                    let params = RemeshParams { frozen_cells: s.frozen.clone(), ..Default::default() };
                    adapt(&s.mesh, &s.metric, &params)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let sweeps = adapted.iter().map(|a| a.sweeps.clone()).collect();
        let pairs: Vec<(SubMesh, Adapted)> = subs.into_iter().zip(adapted).collect();
        let (merged, merged_metric) = merge(&pairs)?;

        let expected: Vec<u64> = parts.iter().flat_map(|p| p.interface.iter().map(|&c| cell_fingerprint(m, c))).collect();
        let present: HashSet<u64> = (0..merged.num_cells()).map(|c| cell_fingerprint(&merged, c)).collect();
        let missing = expected.iter().filter(|h| !present.contains(h)).count();
        if missing > 0 {
            return Err(Error::Merge(format!("{missing} frozen interface cells changed in iteration {iter}")));
        }
        let report = IterationReport {
            axis_seed,
            part_cells: parts.iter().map(|p| p.cells.len()).collect(),
            interface_cells: expected.len(),
            frozen_verified: expected.len(),
            sweeps,
        };
        info!(
            "parallel iteration {iter}: {} parts, {} interface cells, {} -> {} cells",
            np,
            report.interface_cells,
            m.num_cells(),
            merged.num_cells()
        );
        debug!("part sizes {:?}", report.part_cells);
        iterations.push(report);
        current = (merged, merged_metric);
    }
    Ok(ParallelAdapted { mesh: current.0, metric: current.1, iterations })
}
