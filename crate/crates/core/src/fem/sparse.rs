use crate::error::{invalid, Result};

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl CsrMatrix {
    /// Builds a square matrix from triplets; duplicates are summed in
    /// input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return invalid(format!("triplet ({i}, {j}) out of range for n = {n}"));
        }
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut order = vec![0usize; triplets.len()];
        let mut next = counts.clone();
        for (k, &(i, _, _)) in triplets.iter().enumerate() {
            order[next[i]] = k;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for i in 0..n {
            let row = &mut order[counts[i]..counts[i + 1]];
            row.sort_by_key(|&k| triplets[k].1); // stable: keeps input order among duplicates
            for &k in row.iter() {
                let (_, j, v) = triplets[k];
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let diag = (0..n)
            .map(|i| {
                let (s, e) = (row_ptr[i], row_ptr[i + 1]);
                s + col_idx[s..e].partition_point(|&j| j < i)
            })
            .collect();
        Ok(Self { n, row_ptr, col_idx, values, diag })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[s..e].binary_search(&j) {
            Ok(k) => self.values[s + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].iter().copied().zip(self.values[s..e].iter().copied())
    }

    /// Diagonal entry of row `i`, zero if not stored.
    pub fn diagonal(&self, i: usize) -> f64 {
        let k = self.diag[i];
        if k < self.row_ptr[i + 1] && self.col_idx[k] == i {
            self.values[k]
        } else {
            0.0
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.col_idx[s..e].iter().zip(&self.values[s..e]).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol * v.abs().max(1.0)))
    }

    /// Applies the SSOR preconditioner `z = M⁻¹ r` with
    /// `M = (D + ωL) D⁻¹ (D + ωU) / (ω(2 − ω))`.
    pub(crate) fn ssor_apply(&self, omega: f64, r: &[f64], z: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = r[i];
            for k in self.row_ptr[i]..self.diag[i] {
                s -= omega * self.values[k] * z[self.col_idx[k]];
            }
            z[i] = s / self.diagonal(i);
        }
        for i in 0..n {
            z[i] *= self.diagonal(i);
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            let start = if self.diagonal(i) != 0.0 { self.diag[i] + 1 } else { self.diag[i] };
            for k in start..self.row_ptr[i + 1] {
                s -= omega * self.values[k] * z[self.col_idx[k]];
            }
            z[i] = s / self.diagonal(i);
        }
        let scale = omega * (2.0 - omega);
        z.iter_mut().for_each(|v| *v *= scale);
    }
}
