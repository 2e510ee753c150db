//! Eigendecomposition of small symmetric matrices.
//!
//! 2×2 matrices use a closed-form rotation, 3×3 matrices cyclic Jacobi
//! rotations. Eigenvalues are returned in descending order; eigenvectors are
//! the columns of the returned matrix.

pub type Mat3 = [[f64; 3]; 3];

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymEigen {
    pub dim: usize,
    pub values: [f64; 3],
    /// Column `j` is the unit eigenvector of `values[j]`.
    pub vectors: Mat3,
}

impl SymEigen {
    pub fn values(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn vector(&self, j: usize) -> [f64; 3] {
        [self.vectors[0][j], self.vectors[1][j], self.vectors[2][j]]
    }

    /// Rebuilds `V diag(values) Vᵀ` with the given eigenvalues.
    pub fn compose(&self, values: &[f64]) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for i in 0..self.dim {
            for j in 0..=i {
                let mut s = 0.0;
                for (k, &l) in values.iter().enumerate().take(self.dim) {
                    s += self.vectors[i][k] * l * self.vectors[j][k];
                }
                out[i][j] = s;
                out[j][i] = s;
            }
        }
        out
    }
}

pub fn sym_eigen(dim: usize, a: &Mat3) -> SymEigen {
    match dim {
        2 => sym_eigen2(a),
        3 => jacobi3(a),
        _ => panic!("unsupported dimension {dim}"),
    }
}

fn sym_eigen2(a: &Mat3) -> SymEigen {
    let (p, q, r) = (a[0][0], a[1][0], a[1][1]);
    let theta = 0.5 * (2.0 * q).atan2(p - r);
    let (s, c) = theta.sin_cos();
    // Rayleigh quotients along the rotated axes.
    let l1 = c * c * p + 2.0 * s * c * q + s * s * r;
    let l2 = s * s * p - 2.0 * s * c * q + c * c * r;
    let mut vectors = [[0.0; 3]; 3];
    vectors[2][2] = 1.0;
    if l1 >= l2 {
        vectors[0][0] = c;
        vectors[1][0] = s;
        vectors[0][1] = -s;
        vectors[1][1] = c;
        SymEigen {
            dim: 2,
            values: [l1, l2, 0.0],
            vectors,
        }
    } else {
        vectors[0][0] = -s;
        vectors[1][0] = c;
        vectors[0][1] = c;
        vectors[1][1] = s;
        SymEigen {
            dim: 2,
            values: [l2, l1, 0.0],
            vectors,
        }
    }
}

fn jacobi3(input: &Mat3) -> SymEigen {
    let mut a = *input;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off = (2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2])).sqrt();
            if off <= JACOBI_TOL * scale {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                if a[p][q] == 0.0 {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // A <- Jᵀ A J with J the (p,q) Givens rotation.
                for k in 0..3 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a[src][src];
        for k in 0..3 {
            vectors[k][dst] = v[k][src];
        }
    }
    SymEigen {
        dim: 3,
        values,
        vectors,
    }
}
