use std::fmt;
use std::sync::Arc;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `Δu = f` in the unit box, `u = g` on its boundary.
#[derive(Clone)]
pub struct PoissonProblem {
    pub name: String,
    pub dim: usize,
    pub forcing: ScalarFn,
    pub boundary: ScalarFn,
    pub exact: Option<ScalarFn>,
}

impl fmt::Debug for PoissonProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoissonProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `u = (2/3) x·x`, so `f ≡ 4d/3`.
pub fn manufactured_quadratic(dim: usize) -> PoissonProblem {
    let u: ScalarFn = Arc::new(|x: &[f64]| 2.0 / 3.0 * dot(x, x));
    let f = 4.0 * dim as f64 / 3.0;
    PoissonProblem {
        name: "quadratic".into(),
        dim,
        forcing: Arc::new(move |_| f),
        boundary: u.clone(),
        exact: Some(u),
    }
}

/// `u = tanh(α(r² − |x−x0|²))`, a sharp layer on the sphere of radius `r`,
/// with `f = 2α(u² − 1)(4α|x−x0|² u + d)`.
pub fn manufactured_interface(dim: usize, alpha: f64, radius: f64, center: &[f64]) -> PoissonProblem {
    let c: Vec<f64> = center.to_vec();
    let dist2 = move |x: &[f64]| x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let d2 = dist2.clone();
    let r2 = radius * radius;
    let u: ScalarFn = Arc::new(move |x: &[f64]| (alpha * (r2 - d2(x))).tanh());
    let uf = u.clone();
    let d = dim as f64;
    let f: ScalarFn = Arc::new(move |x: &[f64]| {
        let s = dist2(x);
        let v = uf(x);
        2.0 * alpha * (v * v - 1.0) * (4.0 * alpha * s * v + d)
    });
    PoissonProblem {
        name: "interface".into(),
        dim,
        forcing: f,
        boundary: u.clone(),
        exact: Some(u),
    }
}

impl PoissonProblem {
    /// The interface problem with `α = 500`, `r = 0.15`, centered in the box.
    pub fn interface_default(dim: usize) -> Self {
        manufactured_interface(dim, 500.0, 0.15, &vec![0.5; dim])
    }

    pub fn by_name(name: &str, dim: usize) -> Option<Self> {
        match name {
            "quadratic" => Some(manufactured_quadratic(dim)),
            "interface" => Some(Self::interface_default(dim)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Second-order central-difference Laplacian.
    fn fd_laplacian(u: &ScalarFn, x: &[f64], h: f64) -> f64 {
        let mut s = 0.0;
        let u0 = u(x);
        for k in 0..x.len() {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[k] += h;
            m[k] -= h;
            s += (u(&p) - 2.0 * u0 + u(&m)) / (h * h);
        }
        s
    }

    #[test]
    fn quadratic_forcing() {
        let p3 = manufactured_quadratic(3);
        assert_eq!((p3.forcing)(&[0.3, 0.2, 0.9]), 4.0);
        let p2 = manufactured_quadratic(2);
        assert!(((p2.forcing)(&[0.1, 0.1]) - 8.0 / 3.0).abs() < 1e-15);
        let u = p3.exact.unwrap();
        assert_eq!(u(&[0.0, 0.0, 0.0]), 0.0);
        assert!((u(&[1.0, 1.0, 1.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn interface_values() {
        let p = PoissonProblem::interface_default(3);
        // On the sphere u vanishes and f = -2αd.
        let on = [0.65, 0.5, 0.5];
        assert!((p.exact.as_ref().unwrap())(&on).abs() < 1e-12);
        assert!(((p.forcing)(&on) + 3000.0).abs() < 1e-8);
        let center = (p.exact.as_ref().unwrap())(&[0.5, 0.5, 0.5]);
        let expected = 1.0 - 2.0 * (-22.5f64).exp();
        assert!((center - expected).abs() < 1e-15);
    }

    #[test]
    fn finite_difference_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 3] {
            for problem in [manufactured_quadratic(dim), PoissonProblem::interface_default(dim)] {
                let u = problem.exact.clone().unwrap();
                for _ in 0..100 {
                    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.05..0.95)).collect();
                    // Richardson extrapolation cancels the h² term.
                    let fd = (4.0 * fd_laplacian(&u, &x, 5e-5) - fd_laplacian(&u, &x, 1e-4)) / 3.0;
                    let f = (problem.forcing)(&x);
                    let scale = f.abs().max(1.0);
                    assert!((fd - f).abs() <= 1e-5 * scale, "{} at {x:?}: fd {fd} vs f {f}", problem.name);
                }
            }
        }
    }
}
