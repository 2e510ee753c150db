use super::sparse::CsrMatrix;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preconditioner {
    None,
    Ssor { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when `‖r‖ ≤ tol ‖b‖`.
    pub tol: f64,
    /// Defaults to `10 n`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None, preconditioner: Preconditioner::Ssor { omega: 1.5 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for a symmetric positive definite
/// matrix, starting from zero.
pub fn cg_solve(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, SolveInfo)> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::CountMismatch { what: "right-hand side entries".into(), expected: n, found: b.len() });
    }
    if !(opts.tol > 0.0) {
        return invalid("solver tolerance must be positive");
    }
    if let Preconditioner::Ssor { omega } = opts.preconditioner {
        if !(omega > 0.0 && omega < 2.0) {
            return invalid(format!("SSOR relaxation must lie in (0, 2), got {omega}"));
        }
        if let Some(i) = (0..n).find(|&i| !(a.diagonal(i) > 0.0)) {
            return invalid(format!("non-positive diagonal at row {i}"));
        }
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, SolveInfo { iterations: 0, relative_residual: 0.0 }));
    }
    let precondition = |r: &[f64], z: &mut [f64]| match opts.preconditioner {
        Preconditioner::None => z.copy_from_slice(r),
        Preconditioner::Ssor { omega } => a.ssor_apply(omega, r, z),
    };
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    for it in 1..=max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return invalid("matrix is not positive definite");
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= opts.tol {
            log::debug!("cg converged in {it} iterations, residual {res:.3e}");
            return Ok((x, SolveInfo { iterations: it, relative_residual: res }));
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual: res })
}
