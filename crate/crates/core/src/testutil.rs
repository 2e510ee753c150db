use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::{structured_mesh, SimplicialMesh};

/// Structured 2D mesh with interior vertices displaced by up to
/// `amp / 2` cell widths in each direction.
pub fn jittered(n: usize, amp: f64, seed: u64) -> SimplicialMesh {
    let base = structured_mesh(2, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = base.coords().to_vec();
    let h = 1.0 / n as f64;
    for v in 0..base.num_vertices() {
        if base.vertex(v).iter().all(|&x| x > 1e-12 && x < 1.0 - 1e-12) {
            for k in 0..2 {
                coords[2 * v + k] += amp * h * rng.gen_range(-0.5..0.5);
            }
        }
    }
    let cells = base.cells().flatten().copied().collect();
    let facets = (0..base.num_facets()).flat_map(|f| base.facet(f).to_vec()).collect();
    let markers = (0..base.num_facets()).map(|f| base.facet_marker(f)).collect();
    SimplicialMesh::new(2, coords, cells, facets, markers)
        .unwrap()
        .with_corners(base.corners().to_vec())
        .unwrap()
}
