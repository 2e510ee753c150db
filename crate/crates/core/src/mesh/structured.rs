use super::SimplicialMesh;
use crate::error::{invalid, Result};

/// Structured simplicial mesh of the unit square (`2n²` triangles, every
/// square cut along its (0,0)-(1,1) diagonal) or the unit cube (`6n³`
/// tetrahedra, Kuhn subdivision). Boundary facets carry marker 1 and the
/// domain corners are flagged.
pub fn structured_mesh(dim: usize, n: usize) -> Result<SimplicialMesh> {
    if n < 1 {
        return invalid(format!("structured mesh needs n >= 1, got {n}"));
    }
    match dim {
        2 => Ok(square(n)),
        3 => Ok(cube(n)),
        _ => invalid(format!("structured mesh dimension must be 2 or 3, got {dim}")),
    }
}

fn square(n: usize) -> SimplicialMesh {
    let np = n + 1;
    let id = |i: usize, j: usize| j * np + i;
    let h = 1.0 / n as f64;
    let mut coords = Vec::with_capacity(2 * np * np);
    let mut corners = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            coords.push(if i == n { 1.0 } else { i as f64 * h });
            coords.push(if j == n { 1.0 } else { j as f64 * h });
            corners.push((i == 0 || i == n) && (j == 0 || j == n));
        }
    }
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.extend_from_slice(&[a, b, c, a, c, d]);
        }
    }
    let mut facets = Vec::with_capacity(8 * n);
    for i in 0..n {
        facets.extend_from_slice(&[id(i, 0), id(i + 1, 0)]);
        facets.extend_from_slice(&[id(n, i), id(n, i + 1)]);
        facets.extend_from_slice(&[id(i + 1, n), id(i, n)]);
        facets.extend_from_slice(&[id(0, i + 1), id(0, i)]);
    }
    let markers = vec![1; facets.len() / 2];
    SimplicialMesh::new(2, coords, cells, facets, markers)
        .and_then(|m| m.with_corners(corners))
        .expect("structured square mesh is valid")
}

fn cube(n: usize) -> SimplicialMesh {
    let np = n + 1;
    let id = |i: usize, j: usize, k: usize| (k * np + j) * np + i;
    let h = 1.0 / n as f64;
    let coord = |i: usize| if i == n { 1.0 } else { i as f64 * h };
    let mut coords = Vec::with_capacity(3 * np * np * np);
    let mut corners = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                coords.extend_from_slice(&[coord(i), coord(j), coord(k)]);
                corners.push([i, j, k].iter().all(|&x| x == 0 || x == n));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut cells = Vec::with_capacity(24 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    let mut p = [i, j, k];
                    let mut tet = [id(i, j, k); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        p[axis] += 1;
                        tet[s + 1] = id(p[0], p[1], p[2]);
                    }
                    cells.extend_from_slice(&tet);
                }
            }
        }
    }
    // Boundary facets: two triangles per boundary square, consistent with
    // the Kuhn cut (each boundary square is split along its own diagonal
    // from the lower-index corner).
    let mut facets = Vec::with_capacity(2 * 6 * n * n * 3);
    for fixed in 0..3 {
        let (a1, a2) = match fixed {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for side in [0, n] {
            for s in 0..n {
                for t in 0..n {
                    let at = |ds: usize, dt: usize| {
                        let mut p = [0; 3];
                        p[fixed] = side;
                        p[a1] = s + ds;
                        p[a2] = t + dt;
                        id(p[0], p[1], p[2])
                    };
                    facets.extend_from_slice(&[at(0, 0), at(1, 0), at(1, 1)]);
                    facets.extend_from_slice(&[at(0, 0), at(1, 1), at(0, 1)]);
                }
            }
        }
    }
    let markers = vec![1; facets.len() / 3];
    SimplicialMesh::new(3, coords, cells, facets, markers)
        .and_then(|m| m.with_corners(corners))
        .expect("structured cube mesh is valid")
}
