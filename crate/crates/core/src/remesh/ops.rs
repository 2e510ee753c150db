use super::{key, signed_area, Kind, Remesher};
use crate::mesh::quality::simplex_quality;
use crate::metric::MetricTensor;

/// Maximum number of split rounds in [`Remesher::split_to_fixed_point`].
const MAX_SPLIT_ROUNDS: usize = 64;
/// Collapses may always produce elements at least this good.
const COLLAPSE_QUALITY_FLOOR: f64 = 2.5;
/// Minimum relative improvement of the mean star quality for a smoothing move.
const SMOOTH_MIN_GAIN: f64 = 1e-4;
/// A split is refused when a child is worse than this many times its parent
/// (and worse than the collapse floor); stops sliver cascades against
/// unsplittable edges.
const SPLIT_QUALITY_GROWTH: f64 = 2.0;

/// Parameter `t ∈ (0, 1)` splitting an edge into two halves of equal metric
/// length, for a length density varying linearly from `l0` to `l1`.
pub fn metric_midpoint(l0: f64, l1: f64) -> f64 {
    let d = l1 - l0;
    if d.abs() <= 1e-12 * l0.max(l1) {
        return 0.5;
    }
    (((l0 * l0 + l1 * l1) / 2.0).sqrt() - l0) / d
}

impl Remesher {
    /// One round of splits: every edge longer than `l_split` and not touching
    /// a frozen cell is cut at its metric midpoint, longest first.
    pub fn split_long_edges(&mut self) -> usize {
        let l_split = self.params.l_split;
        let mut cand: Vec<(f64, usize, usize)> = self
            .edges()
            .into_iter()
            .map(|[a, b]| (self.edge_length(a, b), a, b))
            .filter(|&(l, _, _)| l > l_split)
            .collect();
        cand.sort_by(|x, y| y.0.total_cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut count = 0;
        for (_, a, b) in cand {
            let ts = self.edge_tris(a, b);
            if ts.is_empty() || ts.iter().any(|&t| self.frozen[t]) {
                continue;
            }
            if self.edge_length(a, b) <= l_split {
                continue;
            }
            let (p, m) = self.split_point(a, b);
            if !self.split_acceptable(a, b, &ts, p, &m) {
                continue;
            }
            self.split_edge(a, b, &ts, p, m);
            count += 1;
        }
        count
    }

    /// Repeats [`Remesher::split_long_edges`] until no edge is split.
    pub fn split_to_fixed_point(&mut self) -> usize {
        let mut total = 0;
        for _ in 0..MAX_SPLIT_ROUNDS {
            let n = self.split_long_edges();
            total += n;
            if n == 0 {
                break;
            }
        }
        total
    }

    /// Position and metric of the vertex splitting edge `(a, b)`.
    fn split_point(&self, a: usize, b: usize) -> ([f64; 2], MetricTensor) {
        let e = self.edge_vec(a, b);
        let l0 = self.metric[a].length(&e);
        let l1 = self.metric[b].length(&e);
        let t = metric_midpoint(l0, l1).clamp(0.25, 0.75);
        let p = [self.pts[a][0] + t * e[0], self.pts[a][1] + t * e[1]];
        // A convex combination of SPD tensors is SPD.
        (p, self.metric[a].lerp(&self.metric[b], t))
    }

    fn split_acceptable(&self, a: usize, b: usize, ts: &[usize], p: [f64; 2], m: &MetricTensor) -> bool {
        let point = |v: usize| [self.pts[v][0], self.pts[v][1], 0.0];
        let np = [p[0], p[1], 0.0];
        let mut parent = 0.0f64;
        let mut child = 0.0f64;
        for &t in ts {
            parent = parent.max(self.tri_quality(t));
            let tri = self.tris[t];
            let i = (0..3)
                .find(|&i| {
                    let (x, y) = (tri[i], tri[(i + 1) % 3]);
                    (x == a && y == b) || (x == b && y == a)
                })
                .expect("triangle contains the edge");
            let (x, y, c) = (tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]);
            // Children in the orientation split_edge will store them.
            for kids in [[point(x), np, point(c)], [np, point(y), point(c)]] {
                let ms = if kids[0] == np {
                    [m, &self.metric[y], &self.metric[c]]
                } else {
                    [&self.metric[x], m, &self.metric[c]]
                };
                let area = 0.5
                    * ((kids[1][0] - kids[0][0]) * (kids[2][1] - kids[0][1])
                        - (kids[2][0] - kids[0][0]) * (kids[1][1] - kids[0][1]));
                if !(area > 0.0) {
                    return false;
                }
                child = child.max(simplex_quality(2, &kids, &ms));
            }
        }
        child.is_finite() && child <= (SPLIT_QUALITY_GROWTH * parent).max(COLLAPSE_QUALITY_FLOOR)
    }

    fn split_edge(&mut self, a: usize, b: usize, ts: &[usize], p: [f64; 2], m: MetricTensor) -> usize {
        let on_boundary = self.is_boundary_edge(a, b);
        let kind = if on_boundary { Kind::Boundary } else { Kind::Interior };
        let np = self.add_vertex(p, m, kind);
        for &ti in ts {
            let tri = self.tris[ti];
            let i = (0..3)
                .find(|&i| {
                    let (x, y) = (tri[i], tri[(i + 1) % 3]);
                    (x == a && y == b) || (x == b && y == a)
                })
                .expect("triangle contains the edge");
            let (x, y, c) = (tri[i], tri[(i + 1) % 3], tri[(i + 2) % 3]);
            self.set_tri(ti, [x, np, c]);
            self.add_tri([np, y, c]);
        }
        if on_boundary {
            let i = self.bindex[&key(a, b)];
            let [s0, s1] = self.bedges[i].v;
            let marker = self.bedges[i].marker;
            self.replace_boundary_edge((a, b), s0, np);
            self.add_boundary_edge(np, s1, marker);
        }
        np
    }

    /// Collapses edges shorter than `l_collapse`, shortest first, when the
    /// result stays valid and no new edge exceeds `l_split`.
    pub fn collapse_short_edges(&mut self) -> usize {
        let l_collapse = self.params.l_collapse;
        let mut cand: Vec<(f64, usize, usize)> = self
            .edges()
            .into_iter()
            .map(|[a, b]| (self.edge_length(a, b), a, b))
            .filter(|&(l, _, _)| l < l_collapse)
            .collect();
        cand.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut count = 0;
        for (_, a, b) in cand {
            if !self.valive[a] || !self.valive[b] || self.edge_tris(a, b).is_empty() {
                continue;
            }
            if self.edge_length(a, b) >= l_collapse {
                continue;
            }
            let remove_a = self.collapse_check(a, b);
            let remove_b = self.collapse_check(b, a);
            let choice = match (remove_a, remove_b) {
                (Some(qa), Some(qb)) => Some(if qb < qa { (b, a) } else { (a, b) }),
                (Some(_), None) => Some((a, b)),
                (None, Some(_)) => Some((b, a)),
                (None, None) => None,
            };
            if let Some((v, u)) = choice {
                self.collapse(v, u);
                count += 1;
            }
        }
        count
    }

    /// Worst quality of the ball of `v` after moving `v` onto `u`, or `None`
    /// when the collapse is not allowed.
    fn collapse_check(&self, v: usize, u: usize) -> Option<f64> {
        if self.locked[v] || self.kind[v] == Kind::Corner {
            return None;
        }
        if self.kind[v] == Kind::Boundary && !self.is_boundary_edge(u, v) {
            return None;
        }
        let shared = self.edge_tris(u, v);
        if shared.is_empty() || shared.iter().any(|&t| self.frozen[t]) {
            return None;
        }
        // Link condition: the only common neighbors are the apexes of the
        // triangles being removed.
        let nv = self.neighbors(v);
        let nu = self.neighbors(u);
        let common = nv.iter().filter(|w| nu.binary_search(w).is_ok()).count();
        if common != shared.len() {
            return None;
        }
        let mut worst_old = 0.0f64;
        let mut worst_new = 0.0f64;
        for &t in &self.vtris[v] {
            worst_old = worst_old.max(self.tri_quality(t));
            if shared.contains(&t) {
                continue;
            }
            let mut tri = self.tris[t];
            tri.iter_mut().filter(|x| **x == v).for_each(|x| *x = u);
            if !(signed_area(&self.pts, &tri) > 0.0) {
                return None;
            }
            let q = self.quality_of(tri, None);
            if !q.is_finite() {
                return None;
            }
            worst_new = worst_new.max(q);
        }
        for &w in &nv {
            if w != u && nu.binary_search(&w).is_err() && self.edge_length(u, w) > self.params.l_split {
                return None;
            }
        }
        if worst_new > worst_old.max(COLLAPSE_QUALITY_FLOOR) {
            return None;
        }
        Some(worst_new)
    }

    fn collapse(&mut self, v: usize, u: usize) {
        let shared = self.edge_tris(u, v);
        if self.kind[v] == Kind::Boundary {
            self.remove_boundary_edge(u, v);
            for (w, _) in self.boundary_neighbors(v) {
                if w == u {
                    continue;
                }
                let i = self.bindex[&key(v, w)];
                let [s0, s1] = self.bedges[i].v;
                let (n0, n1) = if s0 == v { (u, s1) } else { (s0, u) };
                self.replace_boundary_edge((v, w), n0, n1);
            }
        }
        for t in shared {
            self.kill_tri(t);
        }
        for t in self.vtris[v].clone() {
            let mut tri = self.tris[t];
            tri.iter_mut().filter(|x| **x == v).for_each(|x| *x = u);
            self.set_tri(t, tri);
        }
        debug_assert!(self.vtris[v].is_empty());
        self.valive[v] = false;
    }

    /// Flips interior diagonals when the worse of the two triangles improves
    /// by at least the swap threshold. Repeats passes until none flips.
    pub fn swap_edges(&mut self) -> usize {
        let mut total = 0;
        for _ in 0..8 {
            let mut n = 0;
            for [a, b] in self.edges() {
                if self.try_swap(a, b) {
                    n += 1;
                }
            }
            total += n;
            if n == 0 {
                break;
            }
        }
        total
    }

    pub(super) fn try_swap(&mut self, a: usize, b: usize) -> bool {
        if self.is_boundary_edge(a, b) {
            return false;
        }
        let ts = self.edge_tris(a, b);
        if ts.len() != 2 || ts.iter().any(|&t| self.frozen[t]) {
            return false;
        }
        let (t1, t2) = (ts[0], ts[1]);
        let tri1 = self.tris[t1];
        let i = (0..3)
            .find(|&i| {
                let (x, y) = (tri1[i], tri1[(i + 1) % 3]);
                (x == a && y == b) || (x == b && y == a)
            })
            .expect("triangle contains the edge");
        let (x, y, c) = (tri1[i], tri1[(i + 1) % 3], tri1[(i + 2) % 3]);
        let d = *self.tris[t2]
            .iter()
            .find(|&&w| w != x && w != y)
            .expect("second triangle has an apex");
        if self.vtris[c].iter().any(|&t| self.tris[t].contains(&d)) {
            return false;
        }
        let n1 = [x, d, c];
        let n2 = [d, y, c];
        if !(signed_area(&self.pts, &n1) > 0.0 && signed_area(&self.pts, &n2) > 0.0) {
            return false;
        }
        let before = self.tri_quality(t1).max(self.tri_quality(t2));
        let after = self.quality_of(n1, None).max(self.quality_of(n2, None));
        if after.is_finite() && after < before * (1.0 - self.params.swap_threshold) {
            self.set_tri(t1, n1);
            self.set_tri(t2, n2);
            true
        } else {
            false
        }
    }

    /// Moves free vertices toward the mean of the ideal (metric-equilateral)
    /// apexes of their star; boundary vertices slide toward the metric
    /// midpoint of their boundary segment. A move is kept only when the worst
    /// star quality does not degrade and the mean quality improves.
    pub fn smooth_vertices(&mut self) -> usize {
        let mut moved = 0;
        for v in 0..self.pts.len() {
            if !self.valive[v] || self.locked[v] || self.kind[v] == Kind::Corner {
                continue;
            }
            let target = match self.kind[v] {
                Kind::Interior => self.ideal_position(v),
                Kind::Boundary => self.boundary_target(v),
                Kind::Corner => None,
            };
            let Some(target) = target else { continue };
            let w = self.params.smoothing_relaxation;
            let p = self.pts[v];
            let mut accepted = false;
            for step in [w, 0.5 * w] {
                let cand = [p[0] + step * (target[0] - p[0]), p[1] + step * (target[1] - p[1])];
                if self.accept_move(v, cand) {
                    self.pts[v] = cand;
                    for t in self.vtris[v].clone() {
                        self.torigin[t] = None;
                    }
                    accepted = true;
                    break;
                }
            }
            if accepted {
                moved += 1;
            }
        }
        moved
    }

    fn accept_move(&self, v: usize, cand: [f64; 2]) -> bool {
        let mut worst_old = 0.0f64;
        let mut worst_new = 0.0f64;
        let mut sum_old = 0.0;
        let mut sum_new = 0.0;
        for &t in &self.vtris[v] {
            let qo = self.tri_quality(t);
            let qn = self.quality_of(self.tris[t], Some((v, cand)));
            if !qn.is_finite() {
                return false;
            }
            worst_old = worst_old.max(qo);
            worst_new = worst_new.max(qn);
            sum_old += qo;
            sum_new += qn;
        }
        worst_new <= worst_old && sum_new < sum_old * (1.0 - SMOOTH_MIN_GAIN)
    }

    fn ideal_position(&self, v: usize) -> Option<[f64; 2]> {
        let star = &self.vtris[v];
        if star.is_empty() {
            return None;
        }
        let mut acc = [0.0; 2];
        for &t in star {
            let tri = self.tris[t];
            let i = tri.iter().position(|&x| x == v)?;
            let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
            let mean = self.metric[v]
                .lerp(&self.metric[a], 0.5)
                .lerp(&self.metric[b], 1.0 / 3.0);
            let eig = mean.eigen();
            let (pa, pb) = (self.pts[a], self.pts[b]);
            let e = [pb[0] - pa[0], pb[1] - pa[1]];
            // Into metric space, rotate a quarter turn, and back.
            let mut y = [0.0; 2];
            for k in 0..2 {
                let vk = eig.vector(k);
                let c = (vk[0] * e[0] + vk[1] * e[1]) * eig.values[k].sqrt();
                y[0] += c * vk[0];
                y[1] += c * vk[1];
            }
            let r = [-y[1], y[0]];
            let mut n = [0.0; 2];
            for k in 0..2 {
                let vk = eig.vector(k);
                let c = (vk[0] * r[0] + vk[1] * r[1]) / eig.values[k].sqrt();
                n[0] += c * vk[0];
                n[1] += c * vk[1];
            }
            let h = 0.5 * 3f64.sqrt();
            acc[0] += 0.5 * (pa[0] + pb[0]) + h * n[0];
            acc[1] += 0.5 * (pa[1] + pb[1]) + h * n[1];
        }
        let k = star.len() as f64;
        Some([acc[0] / k, acc[1] / k])
    }

    fn boundary_target(&self, v: usize) -> Option<[f64; 2]> {
        let nb = self.boundary_neighbors(v);
        let [(b1, _), (b2, _)] = nb.as_slice() else {
            return None;
        };
        let d = self.edge_vec(*b1, *b2);
        let t = metric_midpoint(self.metric[*b1].length(&d), self.metric[*b2].length(&d)).clamp(0.1, 0.9);
        Some([self.pts[*b1][0] + t * d[0], self.pts[*b1][1] + t * d[1]])
    }
}
