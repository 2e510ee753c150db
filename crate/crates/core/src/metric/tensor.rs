use std::fmt;

use super::eigen::{sym_eigen, Mat3, SymEigen};
use crate::error::{invalid, Result};
use crate::options::AdaptOptions;

/// Symmetric d×d tensor (d = 2 or 3) stored as its lower triangle, row-major:
/// `m11; m21 m22; m31 m32 m33`.
///
/// As a Riemannian metric it prescribes the size `h_i = 1/sqrt(λ_i)` along
/// each eigendirection. Recovered Hessians use the same storage and may be
/// indefinite until passed through [`MetricTensor::enforce_spd`].
#[derive(Clone, Copy, PartialEq)]
pub struct MetricTensor {
    dim: u8,
    m: [f64; 6],
}

impl fmt::Debug for MetricTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("MetricTensor").field(&self.lower()).finish()
    }
}

pub(crate) fn lower_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

#[inline]
fn lower_index(i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

impl MetricTensor {
    pub fn new2(m11: f64, m21: f64, m22: f64) -> Self {
        Self {
            dim: 2,
            m: [m11, m21, m22, 0.0, 0.0, 0.0],
        }
    }

    pub fn new3(m11: f64, m21: f64, m22: f64, m31: f64, m32: f64, m33: f64) -> Self {
        Self {
            dim: 3,
            m: [m11, m21, m22, m31, m32, m33],
        }
    }

    pub fn from_lower(dim: usize, lower: &[f64]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return invalid(format!("metric dimension must be 2 or 3, got {dim}"));
        }
        if lower.len() != lower_len(dim) {
            return invalid(format!(
                "a {dim}D metric has {} entries, got {}",
                lower_len(dim),
                lower.len()
            ));
        }
        let mut m = [0.0; 6];
        m[..lower.len()].copy_from_slice(lower);
        Ok(Self { dim: dim as u8, m })
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "unsupported dimension {dim}");
        Self {
            dim: dim as u8,
            m: [0.0; 6],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut t = Self::zero(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            t.m[lower_index(i, i)] = d;
        }
        t
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        Self::diagonal(&[s; 3][..dim])
    }

    /// Isotropic metric prescribing size `h` in every direction.
    pub fn uniform(dim: usize, h: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return invalid(format!("metric dimension must be 2 or 3, got {dim}"));
        }
        if !(h > 0.0) || !h.is_finite() {
            return invalid(format!("size must be positive, got {h}"));
        }
        Ok(Self::scaled_identity(dim, 1.0 / (h * h)))
    }

    /// Builds `V diag(values) Vᵀ`.
    pub fn from_eigen(eig: &SymEigen, values: &[f64]) -> Self {
        Self::from_matrix(eig.dim, &eig.compose(values))
    }

    /// Takes the lower triangle of `a`.
    pub fn from_matrix(dim: usize, a: &Mat3) -> Self {
        let mut t = Self::zero(dim);
        for i in 0..dim {
            for j in 0..=i {
                t.m[lower_index(i, j)] = a[i][j];
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn lower(&self) -> &[f64] {
        &self.m[..lower_len(self.dim())]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[lower_index(i, j)]
    }

    pub fn to_matrix(&self) -> Mat3 {
        let mut a = [[0.0; 3]; 3];
        for (i, row) in a.iter_mut().enumerate().take(self.dim()) {
            for (j, x) in row.iter_mut().enumerate().take(self.dim()) {
                *x = self.get(i, j);
            }
        }
        a
    }

    /// `vᵀ M v`.
    #[inline]
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let m = &self.m;
        if self.dim == 2 {
            m[0] * v[0] * v[0] + 2.0 * m[1] * v[0] * v[1] + m[2] * v[1] * v[1]
        } else {
            m[0] * v[0] * v[0]
                + m[2] * v[1] * v[1]
                + m[5] * v[2] * v[2]
                + 2.0 * (m[1] * v[0] * v[1] + m[3] * v[0] * v[2] + m[4] * v[1] * v[2])
        }
    }

    /// Euclidean length of `v` measured in this metric, `sqrt(vᵀ M v)`.
    #[inline]
    pub fn length(&self, v: &[f64]) -> f64 {
        self.quad_form(v).max(0.0).sqrt()
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        if self.dim == 2 {
            m[0] * m[2] - m[1] * m[1]
        } else {
            let a = self.to_matrix();
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
    }

    pub fn eigen(&self) -> SymEigen {
        sym_eigen(self.dim(), &self.to_matrix())
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut t = *self;
        t.m.iter_mut().for_each(|x| *x *= s);
        t
    }

    /// Entrywise `(1-t)·self + t·other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (o, (a, b)) in out.m.iter_mut().zip(self.m.iter().zip(&other.m)) {
            *o = (1.0 - t) * a + t * b;
        }
        out
    }

    /// Entrywise weighted sum of tensors; weights need not be normalized.
    pub fn weighted_sum<'a>(items: impl IntoIterator<Item = (f64, &'a MetricTensor)>) -> Option<Self> {
        let mut acc: Option<Self> = None;
        for (w, t) in items {
            match acc.as_mut() {
                None => acc = Some(t.scale(w)),
                Some(a) => {
                    for (x, y) in a.m.iter_mut().zip(&t.m) {
                        *x += w * y;
                    }
                }
            }
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.lower().iter().all(|x| x.is_finite())
    }

    pub fn is_spd(&self) -> bool {
        self.is_finite() && self.eigen().values()[self.dim() - 1] > 0.0
    }

    pub fn max_abs(&self) -> f64 {
        self.lower().iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// True when `self - other` is positive semi-definite, i.e. the unit
    /// ball of `self` lies inside that of `other`.
    pub fn dominates(&self, other: &Self) -> bool {
        let a = self.to_matrix();
        let b = other.to_matrix();
        let d = |i: usize, j: usize| a[i][j] - b[i][j];
        if self.dim == 2 {
            d(0, 0) >= 0.0 && d(1, 1) >= 0.0 && d(0, 0) * d(1, 1) - d(1, 0) * d(1, 0) >= 0.0
        } else {
            let m2 = |i: usize, j: usize| d(i, i) * d(j, j) - d(i, j) * d(i, j);
            let det = d(0, 0) * m2(1, 2) - d(0, 1) * (d(1, 0) * d(2, 2) - d(1, 2) * d(2, 0))
                + d(0, 2) * (d(1, 0) * d(2, 1) - d(1, 1) * d(2, 0));
            (0..3).all(|i| d(i, i) >= 0.0) && m2(0, 1) >= 0.0 && m2(0, 2) >= 0.0 && m2(1, 2) >= 0.0 && det >= 0.0
        }
    }

    /// Replaces each eigenvalue by its modulus clamped to
    /// `[1/h_max², 1/h_min²]`, then raises small eigenvalues so that
    /// `λ_max/λ_min <= a_max²` when an anisotropy bound is set.
    pub fn enforce_spd(&self, opts: &AdaptOptions) -> Self {
        self.enforce_spd_bounds(opts.lambda_min(), opts.lambda_max(), opts.a_max)
    }

    pub fn enforce_spd_bounds(&self, lambda_min: f64, lambda_max: f64, a_max: Option<f64>) -> Self {
        let eig = self.eigen();
        let dim = self.dim();
        let mut vals = [0.0; 3];
        for (v, &l) in vals.iter_mut().zip(eig.values()) {
            *v = l.abs().clamp(lambda_min, lambda_max);
        }
        if let Some(a) = a_max {
            let largest = vals[..dim].iter().cloned().fold(0.0, f64::max);
            let floor = largest / (a * a);
            for v in vals[..dim].iter_mut() {
                *v = v.max(floor);
            }
        }
        Self::from_eigen(&eig, &vals[..dim])
    }

    /// Intersection by simultaneous reduction: the largest metric whose unit
    /// ball lies inside both input unit balls.
    pub fn intersect(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return invalid(format!(
                "cannot intersect a {}D metric with a {}D metric",
                self.dim, other.dim
            ));
        }
        let dim = self.dim();
        let e1 = self.eigen();
        if !self.is_finite() || e1.values()[dim - 1] <= 0.0 {
            return invalid(format!("intersection of a non-SPD metric {self:?}"));
        }
        if !other.is_spd() {
            return invalid(format!("intersection of a non-SPD metric {other:?}"));
        }
        let mut sqrt_vals = [0.0; 3];
        let mut isqrt_vals = [0.0; 3];
        for (i, &l) in e1.values().iter().enumerate() {
            sqrt_vals[i] = l.sqrt();
            isqrt_vals[i] = 1.0 / l.sqrt();
        }
        let half = e1.compose(&sqrt_vals[..dim]);
        let ihalf = e1.compose(&isqrt_vals[..dim]);
        // M1^{-1/2} M2 M1^{-1/2}
        let reduced = mul(dim, &mul(dim, &ihalf, &other.to_matrix()), &ihalf);
        let er = sym_eigen(dim, &symmetrize(dim, &reduced));
        let mut mu = [0.0; 3];
        for (m, &l) in mu.iter_mut().zip(er.values()) {
            *m = l.max(1.0);
        }
        let inner = er.compose(&mu[..dim]);
        let out = mul(dim, &mul(dim, &half, &inner), &half);
        Ok(Self::from_matrix(dim, &symmetrize(dim, &out)))
    }
}

fn mul(dim: usize, a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..dim {
        for j in 0..dim {
            c[i][j] = (0..dim).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn symmetrize(dim: usize, a: &Mat3) -> Mat3 {
    let mut s = *a;
    for i in 0..dim {
        for j in 0..i {
            let v = 0.5 * (a[i][j] + a[j][i]);
            s[i][j] = v;
            s[j][i] = v;
        }
    }
    s
}

/// Metric length of the edge `e` (vector from `u` to `v`) under metrics
/// `mu` and `mv` linearly interpolated along the edge.
pub fn edge_length(mu: &MetricTensor, mv: &MetricTensor, e: &[f64]) -> f64 {
    let l0 = mu.length(e);
    let l1 = mv.length(e);
    if l0 == 0.0 && l1 == 0.0 {
        return 0.0;
    }
    if (l0 - l1).abs() <= 1e-12 * l0 {
        return l0;
    }
    if l0 == 0.0 || l1 == 0.0 {
        // Limit of the logarithmic mean.
        return 0.0;
    }
    (l0 - l1) / (l0 / l1).ln()
}
