//! Degree-4 simplex quadrature rules in barycentric coordinates; weights
//! sum to 1 and are scaled by the cell measure at use.

pub struct Rule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
}

/// Six-point degree-4 rule on triangles.
pub fn triangle_degree4() -> Rule {
    let (a, wa) = (0.445948490915965, 0.223381589678011);
    let (b, wb) = (0.091576213509771, 0.109951743655322);
    let mut points = Vec::with_capacity(6);
    let mut weights = Vec::with_capacity(6);
    for (x, w) in [(a, wa), (b, wb)] {
        let y = 1.0 - 2.0 * x;
        for p in [[y, x, x, 0.0], [x, y, x, 0.0], [x, x, y, 0.0]] {
            points.push(p);
            weights.push(w);
        }
    }
    Rule { points, weights }
}

/// Eleven-point degree-4 rule on tetrahedra (one negative weight).
pub fn tetrahedron_degree4() -> Rule {
    let mut points = vec![[0.25; 4]];
    let mut weights = vec![-74.0 / 5625.0 * 6.0];
    let (a, b) = (1.0 / 14.0, 11.0 / 14.0);
    for i in 0..4 {
        let mut p = [a; 4];
        p[i] = b;
        points.push(p);
        weights.push(343.0 / 45000.0 * 6.0);
    }
    let s = (5.0f64 / 14.0).sqrt();
    let (c, d) = ((1.0 + s) / 4.0, (1.0 - s) / 4.0);
    for (i, j) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let mut p = [d; 4];
        p[i] = c;
        p[j] = c;
        points.push(p);
        weights.push(56.0 / 2250.0 * 6.0);
    }
    Rule { points, weights }
}

pub fn rule(dim: usize) -> Rule {
    if dim == 2 {
        triangle_degree4()
    } else {
        tetrahedron_degree4()
    }
}
