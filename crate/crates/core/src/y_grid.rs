//! Graph approximation of `Y` and implicit Dijkstra over it.
//!
//! Rows sit at heights `s = j h` with `1/h` an integer. A row in strip `i`
//! carries the lattice `x_k = m_k h / sqrt(G_i[k][k])`, so every cell has
//! metric side `h` whatever the strip. Moves come from a fixed stencil of
//! primitive integer vectors. Inside one strip a move is a lattice step;
//! a move into another strip lands on the nearest node of the target row.
//! Every edge is weighted by the exact strip-law length of its straight
//! segment, so any grid path is a genuine path of `Y` and grid distances
//! are upper bounds for the continuous metric.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::y_space::{YModel, YPoint};

/// Upper limit on grid size.
pub const MAX_NODES: usize = 20_000_000;

/// Constant in the additive seam/snapping term of the slack.
pub const C_GEO: f64 = 1.0;

#[derive(Clone, Debug)]
struct Row {
    s: f64,
    strip: i64,
    spacing: Vec<f64>,
    lo: Vec<i64>,
    count: Vec<usize>,
    offset: usize,
    len: usize,
    /// cost of each stencil move whose target row is in the same strip
    costs: Vec<f64>,
}

impl Row {
    fn index_of(&self, m: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for k in (0..m.len()).rev() {
            let r = m[k] - self.lo[k];
            if r < 0 || r as usize >= self.count[k] {
                return None;
            }
            idx = idx * self.count[k] + r as usize;
        }
        Some(self.offset + idx)
    }

    fn coords_of(&self, node: usize) -> Vec<i64> {
        let mut rem = node - self.offset;
        let mut m = Vec::with_capacity(self.lo.len());
        for k in 0..self.lo.len() {
            m.push(self.lo[k] + (rem % self.count[k]) as i64);
            rem /= self.count[k];
        }
        m
    }

    fn x_of(&self, m: &[i64]) -> Vec<f64> {
        m.iter().zip(&self.spacing).map(|(a, h)| *a as f64 * h).collect()
    }

    fn nearest(&self, x: &[f64]) -> Vec<i64> {
        x.iter()
            .zip(&self.spacing)
            .zip(self.lo.iter().zip(&self.count))
            .map(|((v, h), (lo, c))| ((v / h).round() as i64).clamp(*lo, lo + *c as i64 - 1))
            .collect()
    }

    fn snap_exact(&self, x: &[f64]) -> Option<Vec<i64>> {
        let m: Vec<i64> = x.iter().zip(&self.spacing).map(|(v, h)| (v / h).round() as i64).collect();
        self.index_of(&m).map(|_| m)
    }
}

/// A polyline in `Y` whose pieces each lie in one strip, with cumulative lengths.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct YPath {
    points: Vec<YPoint>,
    cum: Vec<f64>,
}

impl YPath {
    fn from_polyline(model: &YModel, pts: &[YPoint]) -> Self {
        let mut points: Vec<YPoint> = Vec::new();
        for w in pts.windows(2) {
            if w[0] == w[1] {
                continue;
            }
            let piece = model.split_at_seams(&w[0], &w[1]);
            let skip = usize::from(!points.is_empty());
            points.extend(piece.into_iter().skip(skip));
        }
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for (i, p) in points.iter().enumerate() {
            if i > 0 {
                acc += model.segment_length(&points[i - 1], p);
            }
            cum.push(acc);
        }
        Self { points, cum }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[YPoint] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    /// Point at arclength `t`, clamped to the ends. Each piece is straight in a
    /// flat strip, so linear interpolation is unit speed.
    pub fn point_at(&self, t: f64) -> Option<YPoint> {
        let first = self.points.first()?;
        if t <= 0.0 {
            return Some(first.clone());
        }
        let k = self.cum.partition_point(|c| *c < t);
        if k >= self.points.len() {
            return self.points.last().cloned();
        }
        let (c0, c1) = (self.cum[k - 1], self.cum[k]);
        let f = if c1 > c0 { (t - c0) / (c1 - c0) } else { 1.0 };
        let (a, b) = (&self.points[k - 1], &self.points[k]);
        Some(YPoint {
            x: a.x.iter().zip(&b.x).map(|(p, q)| p + f * (q - p)).collect(),
            s: a.s + f * (b.s - a.s),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug)]
pub struct YGrid {
    model: YModel,
    per_unit: i64,
    j_lo: i64,
    rows: Vec<Row>,
    stencil: Vec<(Vec<i64>, i64)>,
    total: usize,
    iso_factor: f64,
    anisotropy: f64,
    kappa: f64,
}

impl YGrid {
    pub fn new(model: &YModel) -> Result<Self> {
        let h = model.grid_step();
        let per_unit = (1.0 / h).round() as i64;
        if per_unit < 1 || ((per_unit as f64) * h - 1.0).abs() > 1e-9 {
            return Err(Error::DegenerateGrid(format!("1/h must be a positive integer, h = {h}")));
        }
        let n = model.rank();
        let w = model.window();
        let j_lo = (w.s_lo * per_unit as f64 - 1e-9).ceil() as i64;
        let j_hi = (w.s_hi * per_unit as f64 + 1e-9).floor() as i64;
        if j_hi - j_lo < 1 {
            return Err(Error::DegenerateGrid("window holds fewer than two rows".into()));
        }
        let stencil = stencil(n);
        let mut rows = Vec::with_capacity((j_hi - j_lo + 1) as usize);
        let mut offset = 0usize;
        let mut spacing_of: HashMap<i64, Vec<f64>> = HashMap::new();
        for j in j_lo..=j_hi {
            let strip = j.div_euclid(per_unit);
            let spacing = spacing_of
                .entry(strip)
                .or_insert_with(|| {
                    let g = model.strip_gram(strip);
                    (0..n).map(|k| h / g[k * n + k].sqrt()).collect()
                })
                .clone();
            let mut lo = Vec::with_capacity(n);
            let mut count = Vec::with_capacity(n);
            for k in 0..n {
                let a = (w.x_lo[k] / spacing[k] - 1e-9).ceil() as i64;
                let b = (w.x_hi[k] / spacing[k] + 1e-9).floor() as i64;
                if b < a {
                    return Err(Error::DegenerateGrid(format!(
                        "row at height {} has no node along axis {k}",
                        j as f64 / per_unit as f64
                    )));
                }
                lo.push(a);
                count.push((b - a + 1) as usize);
            }
            let len = count
                .iter()
                .try_fold(1usize, |acc, c| acc.checked_mul(*c))
                .filter(|l| offset + l <= MAX_NODES)
                .ok_or_else(|| Error::DegenerateGrid(format!("grid exceeds {MAX_NODES} nodes")))?;
            rows.push(Row {
                s: j as f64 / per_unit as f64,
                strip,
                spacing,
                lo,
                count,
                offset,
                len,
                costs: Vec::new(),
            });
            offset += len;
        }
        let mut grid = Self {
            model: model.clone(),
            per_unit,
            j_lo,
            rows,
            stencil,
            total: offset,
            iso_factor: 1.0,
            anisotropy: 1.0,
            kappa: 0.0,
        };
        grid.fill_costs();
        grid.fill_slack();
        Ok(grid)
    }

    // Same-strip moves cost the same from every node of a row.
    fn fill_costs(&mut self) {
        let n = self.model.rank();
        for r in 0..self.rows.len() {
            let row = &self.rows[r];
            let origin = YPoint { x: vec![0.0; n], s: row.s };
            let costs = self
                .stencil
                .iter()
                .map(|(dm, dj)| {
                    let t = r as i64 + dj;
                    if t < 0 || t as usize >= self.rows.len() || self.rows[t as usize].strip != row.strip {
                        return f64::NAN;
                    }
                    let target = YPoint { x: row.x_of(dm), s: self.rows[t as usize].s };
                    self.model.segment_length(&origin, &target)
                })
                .collect();
            self.rows[r].costs = costs;
        }
    }

    fn fill_slack(&mut self) {
        let n = self.model.rank();
        let h = self.model.grid_step();
        self.iso_factor = if n == 1 {
            // the cell metric is exactly Euclidean; the worst direction sits
            // halfway inside the widest gap between stencil directions
            let mut angles: Vec<f64> = self
                .stencil
                .iter()
                .map(|(dm, dj)| (*dj as f64).atan2(dm[0] as f64))
                .collect();
            angles.sort_by(f64::total_cmp);
            let mut gap: f64 = angles[0] + 2.0 * std::f64::consts::PI - angles[angles.len() - 1];
            for w in angles.windows(2) {
                gap = gap.max(w[1] - w[0]);
            }
            1.0 / (gap / 2.0).cos()
        } else {
            // axis moves alone already give the l1 bound
            ((n + 1) as f64).sqrt()
        };
        let mut worst: f64 = 1.0;
        let mut strips: Vec<i64> = self.rows.iter().map(|r| r.strip).collect();
        strips.dedup();
        for s in strips {
            let g = self.model.strip_gram(s);
            let d: Vec<f64> = (0..n).map(|k| 1.0 / g[k * n + k].sqrt()).collect();
            let cell: Vec<f64> = (0..n * n).map(|i| g[i] * d[i / n] * d[i % n]).collect();
            let lam = min_eigenvalue(&cell, n).min(1.0);
            worst = worst.max(1.0 / lam.sqrt());
        }
        self.anisotropy = worst;
        self.kappa = self.iso_factor * worst - 1.0 + C_GEO * h * worst;
    }

    pub fn model(&self) -> &YModel {
        &self.model
    }

    pub fn node_count(&self) -> usize {
        self.total
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Multiplicative slack `kappa(h)`: at scales well above `h`,
    /// `upper <= (1 + kappa) d_Y`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Largest metric anisotropy of a cell over the window.
    pub fn anisotropy(&self) -> f64 {
        self.anisotropy
    }

    /// Worst ratio of stencil-path length to true length for an isotropic cell.
    pub fn isotropy_factor(&self) -> f64 {
        self.iso_factor
    }

    fn row_of(&self, node: usize) -> usize {
        self.rows.partition_point(|r| r.offset + r.len <= node)
    }

    pub fn node_point(&self, node: usize) -> YPoint {
        let row = &self.rows[self.row_of(node)];
        YPoint { x: row.x_of(&row.coords_of(node)), s: row.s }
    }

    pub fn node_strip(&self, node: usize) -> i64 {
        self.rows[self.row_of(node)].strip
    }

    /// Nearest node and the strip-law length of the snapping segment.
    pub fn snap(&self, p: &YPoint) -> Result<(usize, f64)> {
        if p.x.len() != self.model.rank() {
            return Err(Error::DimensionMismatch("point dimension differs from rank".into()));
        }
        if !p.is_finite() || !self.model.in_window(p) {
            return Err(Error::OutsideWindow);
        }
        let j = ((p.s * self.per_unit as f64).round() as i64 - self.j_lo).clamp(0, self.rows.len() as i64 - 1);
        let row = &self.rows[j as usize];
        let m = row.nearest(&p.x);
        let node = row.index_of(&m).expect("clamped coordinates lie in the row");
        let q = YPoint { x: row.x_of(&m), s: row.s };
        Ok((node, self.model.segment_length(p, &q)))
    }

    fn for_each_neighbor(&self, node: usize, mut f: impl FnMut(usize, f64)) {
        let r = self.row_of(node);
        let row = &self.rows[r];
        let m = row.coords_of(node);
        let here = YPoint { x: row.x_of(&m), s: row.s };
        let nrows = self.rows.len() as i64;
        let mut buf = m.clone();
        for (si, (dm, dj)) in self.stencil.iter().enumerate() {
            let t = r as i64 + dj;
            if t < 0 || t >= nrows {
                continue;
            }
            let target = &self.rows[t as usize];
            if target.strip == row.strip {
                for k in 0..m.len() {
                    buf[k] = m[k] + dm[k];
                }
                if let Some(idx) = target.index_of(&buf) {
                    f(idx, row.costs[si]);
                }
            } else {
                // forward cross-strip move
                for k in 0..m.len() {
                    buf[k] = m[k] + dm[k];
                }
                let x = row.x_of(&buf);
                if let Some(mt) = target.snap_exact(&x) {
                    let idx = target.index_of(&mt).unwrap();
                    let there = YPoint { x: target.x_of(&mt), s: target.s };
                    f(idx, self.model.segment_length(&here, &there));
                }
                // reverse: nodes of `target` whose move `(dm, -dj)` snaps onto us
                let src = target;
                let mut ranges = Vec::with_capacity(m.len());
                for k in 0..m.len() {
                    let a = ((m[k] as f64 - 0.5) * row.spacing[k] / src.spacing[k]).floor() as i64 - dm[k] - 1;
                    let b = ((m[k] as f64 + 0.5) * row.spacing[k] / src.spacing[k]).ceil() as i64 - dm[k] + 1;
                    let lo = a.max(src.lo[k]);
                    let hi = b.min(src.lo[k] + src.count[k] as i64 - 1);
                    if hi < lo {
                        ranges.clear();
                        break;
                    }
                    ranges.push((lo, hi));
                }
                if ranges.len() != m.len() {
                    continue;
                }
                let back_dj = -dj;
                if !self.stencil.iter().any(|(e, ej)| e == dm && *ej == back_dj) {
                    continue;
                }
                let mut cand: Vec<i64> = ranges.iter().map(|r| r.0).collect();
                loop {
                    let mut moved = cand.clone();
                    for k in 0..m.len() {
                        moved[k] += dm[k];
                    }
                    if row.snap_exact(&src.x_of(&moved)).as_deref() == Some(&m[..]) {
                        let idx = src.index_of(&cand).unwrap();
                        let there = YPoint { x: src.x_of(&cand), s: src.s };
                        f(idx, self.model.segment_length(&here, &there));
                    }
                    // odometer over the box
                    let mut k = 0;
                    loop {
                        if k == m.len() {
                            break;
                        }
                        if cand[k] < ranges[k].1 {
                            cand[k] += 1;
                            break;
                        }
                        cand[k] = ranges[k].0;
                        k += 1;
                    }
                    if k == m.len() {
                        break;
                    }
                }
            }
        }
    }

    /// Grid distances from node `src`, stopping once every target is settled.
    fn dijkstra(&self, src: usize, targets: &[usize], want_pred: bool) -> (Vec<f64>, Vec<usize>) {
        let mut dist = vec![f64::INFINITY; self.total];
        let mut pred = if want_pred { vec![usize::MAX; self.total] } else { Vec::new() };
        let mut pending: HashMap<usize, usize> = HashMap::new();
        for t in targets {
            *pending.entry(*t).or_default() += 1;
        }
        let mut remaining = pending.len();
        let mut done = vec![false; self.total];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Item(0.0, src));
        while let Some(Item(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if pending.remove(&u).is_some() {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            self.for_each_neighbor(u, |v, w| {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    if want_pred {
                        pred[v] = u;
                    }
                    heap.push(Item(nd, v));
                }
            });
        }
        (dist, pred)
    }

    /// Upper bounds for `d_Y(a, t)` over all targets: the better of the straight
    /// segment and the snapped grid route.
    pub fn distances_from(&self, a: &YPoint, targets: &[YPoint]) -> Result<Vec<f64>> {
        let (na, ca) = self.snap(a)?;
        let snapped = targets.iter().map(|t| self.snap(t)).collect::<Result<Vec<_>>>()?;
        let nodes: Vec<usize> = snapped.iter().map(|s| s.0).collect();
        let (dist, _) = self.dijkstra(na, &nodes, false);
        Ok(targets
            .iter()
            .zip(&snapped)
            .map(|(t, (nb, cb))| {
                let direct = self.model.segment_length(a, t);
                direct.min(ca + dist[*nb] + cb)
            })
            .collect())
    }

    /// Snapped grid route only, without the straight-segment shortcut.
    pub fn grid_route_length(&self, a: &YPoint, b: &YPoint) -> Result<f64> {
        let (na, ca) = self.snap(a)?;
        let (nb, cb) = self.snap(b)?;
        let (dist, _) = self.dijkstra(na, &[nb], false);
        Ok(ca + dist[nb] + cb)
    }

    /// `(lower, upper)` bracket for `d_Y(a, b)`.
    pub fn y_distance(&self, a: &YPoint, b: &YPoint) -> Result<(f64, f64)> {
        let upper = self.distances_from(a, std::slice::from_ref(b))?[0];
        Ok((upper / (1.0 + self.kappa), upper))
    }

    /// Path realizing `y_distance(a, b).1`.
    pub fn y_geodesic(&self, a: &YPoint, b: &YPoint) -> Result<YPath> {
        Ok(self.geodesics_from(a, std::slice::from_ref(b))?.pop().expect("one target"))
    }

    /// Paths realizing `distances_from(a, targets)`, from one Dijkstra run.
    pub fn geodesics_from(&self, a: &YPoint, targets: &[YPoint]) -> Result<Vec<YPath>> {
        let (na, ca) = self.snap(a)?;
        let snapped = targets.iter().map(|t| self.snap(t)).collect::<Result<Vec<_>>>()?;
        let nodes: Vec<usize> = snapped.iter().map(|s| s.0).collect();
        let (dist, pred) = self.dijkstra(na, &nodes, true);
        Ok(targets
            .iter()
            .zip(&snapped)
            .map(|(b, &(nb, cb))| {
                if a == b {
                    return YPath::default();
                }
                let direct = self.model.segment_length(a, b);
                if direct <= ca + dist[nb] + cb {
                    return YPath::from_polyline(&self.model, &[a.clone(), b.clone()]);
                }
                let mut nodes = vec![nb];
                while *nodes.last().unwrap() != na {
                    nodes.push(pred[*nodes.last().unwrap()]);
                }
                nodes.reverse();
                let mut pts = vec![a.clone()];
                pts.extend(nodes.into_iter().map(|v| self.node_point(v)));
                pts.push(b.clone());
                YPath::from_polyline(&self.model, &pts)
            })
            .collect())
    }

    /// One line per node: `x1..xn, s, strip_index`.
    pub fn to_csv(&self) -> String {
        let n = self.model.rank();
        let mut out = String::new();
        let head: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
        let _ = writeln!(out, "{},s,strip_index", head.join(","));
        for row in &self.rows {
            for node in row.offset..row.offset + row.len {
                let x = row.x_of(&row.coords_of(node));
                let xs: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
                let _ = writeln!(out, "{},{},{}", xs.join(","), row.s, row.strip);
            }
        }
        out
    }
}

/// Primitive integer moves `(dm, dj) != 0`; radius 2 for `n = 1`, else 1.
fn stencil(n: usize) -> Vec<(Vec<i64>, i64)> {
    let r: i64 = if n == 1 { 2 } else { 1 };
    let side = (2 * r + 1) as usize;
    let mut out = Vec::new();
    let total = side.pow((n + 1) as u32);
    for code in 0..total {
        let mut c = code;
        let mut v = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            v.push((c % side) as i64 - r);
            c /= side;
        }
        let g = v.iter().fold(0i64, |acc, x| num_integer::gcd(acc, *x));
        if g != 1 {
            continue;
        }
        let dj = v.pop().unwrap();
        out.push((v, dj));
    }
    out
}

/// Smallest eigenvalue of a symmetric positive-definite matrix, by bisection
/// on the Cholesky test.
fn min_eigenvalue(a: &[f64], n: usize) -> f64 {
    let pd = |shift: f64| -> bool {
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = a[i * n + j] - if i == j { shift } else { 0.0 };
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= 0.0 {
                        return false;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        true
    };
    let mut lo = 0.0;
    let mut hi = (0..n).map(|i| a[i * n + i]).sum::<f64>();
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if pd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Presentation;
    use crate::y_space::Window;
    use std::sync::Arc;

    fn grid(h: f64) -> YGrid {
        let p = Arc::new(Presentation::baumslag_solitar(1, 2).unwrap());
        let m = YModel::standard(p, h, Window::symmetric(1, 10.0, 5.0)).unwrap();
        YGrid::new(&m).unwrap()
    }

    #[test]
    fn stencil_sizes() {
        assert_eq!(stencil(1).len(), 16);
        assert_eq!(stencil(2).len(), 26);
    }

    #[test]
    fn slack_for_rank_one() {
        let g = grid(0.1);
        assert!((g.isotropy_factor() - 1.0 / (0.5f64 * 0.5f64.atan()).cos()).abs() < 1e-12);
        assert!((g.anisotropy() - 1.0).abs() < 1e-12);
        assert!((g.kappa() - (g.isotropy_factor() - 1.0 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn edges_are_symmetric() {
        let g = grid(0.25);
        let mut adj: HashMap<(usize, usize), f64> = HashMap::new();
        for u in 0..g.node_count() {
            g.for_each_neighbor(u, |v, w| {
                assert!(w > 0.0);
                adj.insert((u, v), w);
            });
        }
        for ((u, v), w) in &adj {
            let back = adj.get(&(*v, *u)).unwrap_or_else(|| panic!("missing reverse of {u}->{v}"));
            assert_eq!(back, w);
        }
    }

    #[test]
    fn distance_examples() {
        let g = grid(0.1);
        let o = YPoint::new(vec![0.0], 0.0);
        assert_eq!(g.y_distance(&o, &o).unwrap(), (0.0, 0.0));
        let up = YPoint::new(vec![0.0], 2.0);
        let (lo, hi) = g.y_distance(&o, &up).unwrap();
        assert!((hi - 2.0).abs() < 1e-12 && lo <= hi);
        assert!((g.grid_route_length(&o, &up).unwrap() - 2.0).abs() < 1e-9);
        // climbing makes horizontal motion cheap
        let far = YPoint::new(vec![8.0], 0.0);
        let (_, d) = g.y_distance(&o, &far).unwrap();
        assert!(d < 8.0, "{d}");
        assert!(d > 4.0);
    }

    #[test]
    fn geodesic_matches_distance() {
        let g = grid(0.1);
        let a = YPoint::new(vec![-3.0], 0.3);
        let b = YPoint::new(vec![4.5], -0.2);
        let path = g.y_geodesic(&a, &b).unwrap();
        let (_, d) = g.y_distance(&a, &b).unwrap();
        assert!((path.length() - d).abs() < 1e-9);
        assert_eq!(path.points().first(), Some(&a));
        assert_eq!(path.points().last(), Some(&b));
        let mid = path.point_at(d / 2.0).unwrap();
        let l1 = g.model().segment_length(&a, &a);
        assert_eq!(l1, 0.0);
        assert!(g.model().in_window(&mid));
        assert!(g.y_geodesic(&a, &a).unwrap().is_empty());
    }

    #[test]
    fn window_and_step_errors() {
        let g = grid(0.1);
        assert_eq!(g.y_distance(&YPoint::new(vec![11.0], 0.0), &YPoint::origin(1)), Err(Error::OutsideWindow));
        let p = Arc::new(Presentation::baumslag_solitar(1, 2).unwrap());
        let m = YModel::standard(p, 0.3, Window::symmetric(1, 1.0, 1.0)).unwrap();
        assert!(matches!(YGrid::new(&m), Err(Error::DegenerateGrid(_))));
    }

    #[test]
    fn refinement_does_not_hurt_much() {
        let a = YPoint::new(vec![-2.0], 0.5);
        let b = YPoint::new(vec![3.0], -0.5);
        let d1 = grid(0.2).y_distance(&a, &b).unwrap().1;
        let d2 = grid(0.1).y_distance(&a, &b).unwrap().1;
        assert!(d2 <= d1 + 0.4);
    }

    #[test]
    fn rank_two_grid() {
        let p = Arc::new(Presentation::from_preset("abc:2:2,1;1,1").unwrap());
        let m = YModel::standard(p, 0.25, Window::symmetric(2, 1.0, 1.0)).unwrap();
        let g = YGrid::new(&m).unwrap();
        assert!(g.kappa() > 0.0);
        let a = YPoint::new(vec![0.0, 0.0], 0.0);
        let b = YPoint::new(vec![0.5, -0.5], 0.5);
        let (lo, hi) = g.y_distance(&a, &b).unwrap();
        assert!(lo <= hi && hi <= m.segment_length(&a, &b) + 1e-12);
        assert!(g.to_csv().lines().count() == g.node_count() + 1);
    }
}
