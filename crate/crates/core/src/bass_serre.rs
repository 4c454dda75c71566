//! Local pieces of the Bass-Serre tree.
//!
//! Vertices are left cosets `gG`, keyed by the syllable part of the normal
//! form of `g`. Edges are left cosets `g i1(H)`, keyed by the syllables of `g`
//! together with the representative of its tail modulo `i1(Z^n)`. The edge
//! `g i1(H)` runs from `g t^-1 G` up to `gG`, so every edge raises the height
//! `c` by exactly one.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, Presentation, Syllable};
use crate::lattice::IVec;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexKey(pub Vec<Syllable>);

impl VertexKey {
    pub fn base() -> Self {
        VertexKey(Vec::new())
    }

    pub fn is_base(&self) -> bool {
        self.0.is_empty()
    }

    /// `c(gG) = p(g)`.
    pub fn height(&self) -> i64 {
        self.0.iter().map(|s| s.sign as i64).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    pub syllables: Vec<Syllable>,
    pub tail_rep: IVec,
}

impl EdgeKey {
    pub fn target(&self) -> VertexKey {
        VertexKey(self.syllables.clone())
    }

    pub fn source_height(&self) -> i64 {
        self.target().height() - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incidence {
    pub edge: EdgeKey,
    pub neighbor: VertexKey,
    /// true when the edge leaves the vertex (goes up)
    pub outgoing: bool,
}

/// A point of the metric tree: a vertex, or a point at parameter `u` in `(0, 1)`
/// along an edge (measured from the source).
#[derive(Clone, Debug, PartialEq)]
pub enum TreePoint {
    Vertex(VertexKey),
    Interior { edge: EdgeKey, u: f64 },
}

impl TreePoint {
    pub fn height(&self) -> f64 {
        match self {
            TreePoint::Vertex(v) => v.height() as f64,
            TreePoint::Interior { edge, u } => edge.source_height() as f64 + u,
        }
    }
}

impl Presentation {
    pub fn vertex_of(&self, g: &GroupElement) -> VertexKey {
        VertexKey(g.syllables.clone())
    }

    pub fn vertex_element(&self, v: &VertexKey) -> GroupElement {
        GroupElement {
            syllables: v.0.clone(),
            tail: vec![0; self.rank()],
        }
    }

    /// The edge coset `g i1(H)`.
    pub fn edge_of(&self, g: &GroupElement) -> EdgeKey {
        EdgeKey {
            syllables: g.syllables.clone(),
            tail_rep: self.cosets_i1().rep_of(&g.tail),
        }
    }

    pub fn edge_element(&self, e: &EdgeKey) -> GroupElement {
        GroupElement {
            syllables: e.syllables.clone(),
            tail: e.tail_rep.clone(),
        }
    }

    pub fn edge_source(&self, e: &EdgeKey) -> VertexKey {
        let mut g = self.edge_element(e);
        self.push_t(&mut g, -1);
        self.vertex_of(&g)
    }

    /// The edge `[base, tG]`.
    pub fn base_edge(&self) -> EdgeKey {
        self.edge_of(&self.t())
    }

    /// Upward edge through the zero coset of `i2(Z^n)`: from `gG` to `gtG`.
    pub fn canonical_up_edge(&self, v: &VertexKey) -> EdgeKey {
        let mut g = self.vertex_element(v);
        self.push_t(&mut g, 1);
        self.edge_of(&g)
    }

    /// Downward edge through the zero coset of `i1(Z^n)`: from `gt^-1G` to `gG`.
    pub fn canonical_down_edge(&self, v: &VertexKey) -> EdgeKey {
        EdgeKey {
            syllables: v.0.clone(),
            tail_rep: vec![0; self.rank()],
        }
    }

    /// All incident edges: `[G : i1(H)]` incoming, `[G : i2(H)]` outgoing.
    pub fn neighbors(&self, v: &VertexKey) -> Vec<Incidence> {
        let mut out = Vec::with_capacity(self.cosets_i1().index() + self.cosets_i2().index());
        for rep in self.cosets_i1().reps() {
            let edge = EdgeKey {
                syllables: v.0.clone(),
                tail_rep: rep.clone(),
            };
            let neighbor = self.edge_source(&edge);
            out.push(Incidence {
                edge,
                neighbor,
                outgoing: false,
            });
        }
        for rep in self.cosets_i2().reps() {
            let mut g = self.vertex_element(v);
            g.tail = rep.clone();
            self.push_t(&mut g, 1);
            out.push(Incidence {
                edge: self.edge_of(&g),
                neighbor: self.vertex_of(&g),
                outgoing: true,
            });
        }
        out
    }

    pub fn act_vertex(&self, g: &GroupElement, v: &VertexKey) -> VertexKey {
        self.vertex_of(&self.multiply(g, &self.vertex_element(v)))
    }

    pub fn act_edge(&self, g: &GroupElement, e: &EdgeKey) -> EdgeKey {
        self.edge_of(&self.multiply(g, &self.edge_element(e)))
    }

    /// The action preserves orientation, so edge parameters are unchanged.
    pub fn act_tree_point(&self, g: &GroupElement, p: &TreePoint) -> TreePoint {
        match p {
            TreePoint::Vertex(v) => TreePoint::Vertex(self.act_vertex(g, v)),
            TreePoint::Interior { edge, u } => TreePoint::Interior {
                edge: self.act_edge(g, edge),
                u: *u,
            },
        }
    }

    /// Builds a tree point, rewriting `u = 0` and `u = 1` as vertices.
    pub fn tree_point(&self, edge: EdgeKey, u: f64) -> Result<TreePoint> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Invalid(format!("edge parameter {u} outside [0, 1]")));
        }
        Ok(if u == 0.0 {
            TreePoint::Vertex(self.edge_source(&edge))
        } else if u == 1.0 {
            TreePoint::Vertex(edge.target())
        } else {
            TreePoint::Interior { edge, u }
        })
    }

    pub fn format_vertex(&self, v: &VertexKey) -> String {
        self.format(&self.vertex_element(v))
    }

    pub fn format_edge(&self, e: &EdgeKey) -> String {
        self.format(&self.edge_element(e))
    }

    /// `beta_x(u)`: the point at signed height offset `u` along the canonical
    /// monotone ray through `x`, with no ball check.
    pub fn ray_point(&self, x: &TreePoint, u: f64) -> TreePoint {
        let (mut v, mut rem) = match x {
            TreePoint::Vertex(v) => (v.clone(), u),
            TreePoint::Interior { edge, u: w } => {
                let target = w + u;
                if target > 0.0 && target < 1.0 {
                    return TreePoint::Interior {
                        edge: edge.clone(),
                        u: target,
                    };
                }
                if target >= 1.0 {
                    (edge.target(), target - 1.0)
                } else {
                    (self.edge_source(edge), target)
                }
            }
        };
        loop {
            if rem == 0.0 {
                return TreePoint::Vertex(v);
            }
            if rem > 0.0 {
                let e = self.canonical_up_edge(&v);
                if rem < 1.0 {
                    return TreePoint::Interior { edge: e, u: rem };
                }
                v = e.target();
                rem -= 1.0;
            } else {
                let e = self.canonical_down_edge(&v);
                if rem > -1.0 {
                    return TreePoint::Interior { edge: e, u: 1.0 + rem };
                }
                v = self.edge_source(&e);
                rem += 1.0;
            }
        }
    }
}

/// A segment of a tree path along one edge, from parameter `from` to `to`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeSegment {
    pub edge: EdgeKey,
    pub from: f64,
    pub to: f64,
}

impl TreeSegment {
    pub fn length(&self) -> f64 {
        (self.to - self.from).abs()
    }
}

/// The finite subtree of vertices within `radius` of `center`.
#[derive(Clone, Debug)]
pub struct TreeBall {
    pres: Arc<Presentation>,
    center: VertexKey,
    radius: usize,
    vertices: Vec<VertexKey>,
    index: HashMap<VertexKey, usize>,
    depth: Vec<usize>,
    parent: Vec<Option<usize>>,
    adjacency: Vec<Vec<(usize, usize)>>,
    edges: Vec<(EdgeKey, usize, usize)>,
    edge_index: HashMap<EdgeKey, usize>,
}

impl TreeBall {
    pub fn new(pres: Arc<Presentation>, center: VertexKey, radius: usize) -> Result<Self> {
        Self::with_cap(pres, center, radius, crate::group::DEFAULT_BALL_CAP)
    }

    pub fn around_base(pres: Arc<Presentation>, radius: usize) -> Result<Self> {
        Self::new(pres, VertexKey::base(), radius)
    }

    pub fn with_cap(pres: Arc<Presentation>, center: VertexKey, radius: usize, cap: usize) -> Result<Self> {
        let mut ball = TreeBall {
            pres,
            center: center.clone(),
            radius,
            vertices: vec![center.clone()],
            index: HashMap::from([(center, 0)]),
            depth: vec![0],
            parent: vec![None],
            adjacency: vec![Vec::new()],
            edges: Vec::new(),
            edge_index: HashMap::new(),
        };
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let interior = ball.depth[i] < radius;
            for inc in ball.pres.neighbors(&ball.vertices[i]) {
                let j = match ball.index.get(&inc.neighbor) {
                    Some(&j) => j,
                    None if interior => {
                        if ball.vertices.len() >= cap {
                            return Err(Error::BudgetExceeded { cap });
                        }
                        let j = ball.vertices.len();
                        ball.index.insert(inc.neighbor.clone(), j);
                        ball.vertices.push(inc.neighbor);
                        ball.depth.push(ball.depth[i] + 1);
                        ball.parent.push(Some(i));
                        ball.adjacency.push(Vec::new());
                        queue.push_back(j);
                        j
                    }
                    None => continue,
                };
                if !ball.edge_index.contains_key(&inc.edge) {
                    let (src, tgt) = if inc.outgoing { (i, j) } else { (j, i) };
                    let k = ball.edges.len();
                    ball.edge_index.insert(inc.edge.clone(), k);
                    ball.edges.push((inc.edge, src, tgt));
                    ball.adjacency[i].push((j, k));
                    ball.adjacency[j].push((i, k));
                }
            }
        }
        Ok(ball)
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        &self.pres
    }

    pub fn center(&self) -> &VertexKey {
        &self.center
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[VertexKey] {
        &self.vertices
    }

    pub fn vertex_index(&self, v: &VertexKey) -> Option<usize> {
        self.index.get(v).copied()
    }

    pub fn depth_of(&self, i: usize) -> usize {
        self.depth[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Edges as `(key, source index, target index)`.
    pub fn edges(&self) -> &[(EdgeKey, usize, usize)] {
        &self.edges
    }

    pub fn parent_of(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    /// Edge between a vertex and its BFS parent.
    pub fn parent_edge(&self, i: usize) -> Option<usize> {
        let p = self.parent[i]?;
        self.adjacency[i].iter().find(|&&(j, _)| j == p).map(|&(_, k)| k)
    }

    pub fn contains_vertex(&self, v: &VertexKey) -> bool {
        self.index.contains_key(v)
    }

    pub fn contains(&self, p: &TreePoint) -> bool {
        match p {
            TreePoint::Vertex(v) => self.contains_vertex(v),
            TreePoint::Interior { edge, .. } => self.edge_index.contains_key(edge),
        }
    }

    /// Connected and `|E| = |V| - 1`.
    pub fn is_tree(&self) -> bool {
        if self.edges.len() + 1 != self.vertices.len() {
            return false;
        }
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &(j, _) in &self.adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Indices of vertices at depth below the radius.
    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.vertices.len()).filter(move |&i| self.depth[i] < self.radius)
    }

    fn lca(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a].expect("non-root");
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b].expect("non-root");
        }
        while a != b {
            a = self.parent[a].expect("non-root");
            b = self.parent[b].expect("non-root");
        }
        a
    }

    pub fn vertex_distance(&self, a: usize, b: usize) -> usize {
        let c = self.lca(a, b);
        self.depth[a] + self.depth[b] - 2 * self.depth[c]
    }

    /// Edge indices along the path from `a` to `b`, in order.
    pub fn vertex_path(&self, a: usize, b: usize) -> Vec<(usize, usize, usize)> {
        let c = self.lca(a, b);
        let mut up = Vec::new();
        let mut x = a;
        while x != c {
            let p = self.parent[x].expect("non-root");
            up.push((x, p, self.parent_edge(x).expect("parent edge")));
            x = p;
        }
        let mut down = Vec::new();
        let mut y = b;
        while y != c {
            let p = self.parent[y].expect("non-root");
            down.push((p, y, self.parent_edge(y).expect("parent edge")));
            y = p;
        }
        up.extend(down.into_iter().rev());
        up
    }

    /// Nearby vertices of a point as `(vertex index, distance)`.
    fn anchors(&self, p: &TreePoint) -> Result<Vec<(usize, f64)>> {
        match p {
            TreePoint::Vertex(v) => Ok(vec![(self.vertex_index(v).ok_or(Error::OutsideBall)?, 0.0)]),
            TreePoint::Interior { edge, u } => {
                let &k = self.edge_index.get(edge).ok_or(Error::OutsideBall)?;
                let (_, s, t) = self.edges[k];
                Ok(vec![(s, *u), (t, 1.0 - u)])
            }
        }
    }

    pub fn tree_distance(&self, a: &TreePoint, b: &TreePoint) -> Result<f64> {
        Ok(self.geodesic_plan(a, b)?.0)
    }

    fn geodesic_plan(&self, a: &TreePoint, b: &TreePoint) -> Result<(f64, Option<(usize, usize)>)> {
        if let (TreePoint::Interior { edge: ea, u: ua }, TreePoint::Interior { edge: eb, u: ub }) = (a, b) {
            if ea == eb {
                if !self.edge_index.contains_key(ea) {
                    return Err(Error::OutsideBall);
                }
                return Ok(((ua - ub).abs(), None));
            }
        }
        let mut best = (f64::INFINITY, None);
        for (va, da) in self.anchors(a)? {
            for &(vb, db) in &self.anchors(b)? {
                let d = da + self.vertex_distance(va, vb) as f64 + db;
                if d < best.0 {
                    best = (d, Some((va, vb)));
                }
            }
        }
        Ok(best)
    }

    /// Unit-speed geodesic from `a` to `b` as edge segments.
    pub fn geodesic_sigma(&self, a: &TreePoint, b: &TreePoint) -> Result<Vec<TreeSegment>> {
        let (_, plan) = self.geodesic_plan(a, b)?;
        let Some((va, vb)) = plan else {
            let (TreePoint::Interior { edge, u: ua }, TreePoint::Interior { u: ub, .. }) = (a, b) else {
                unreachable!("same-edge plan only for interior points")
            };
            if ua == ub {
                return Ok(Vec::new());
            }
            return Ok(vec![TreeSegment {
                edge: edge.clone(),
                from: *ua,
                to: *ub,
            }]);
        };
        let mut segs = Vec::new();
        if let TreePoint::Interior { edge, u } = a {
            let (_, s, _) = self.edges[self.edge_index[edge]];
            segs.push(TreeSegment {
                edge: edge.clone(),
                from: *u,
                to: if va == s { 0.0 } else { 1.0 },
            });
        }
        for (x, y, k) in self.vertex_path(va, vb) {
            let (ref key, s, _) = self.edges[k];
            let (from, to) = if x == s { (0.0, 1.0) } else { (1.0, 0.0) };
            debug_assert!(x == s || y == s);
            segs.push(TreeSegment {
                edge: key.clone(),
                from,
                to,
            });
        }
        if let TreePoint::Interior { edge, u } = b {
            let (_, s, _) = self.edges[self.edge_index[edge]];
            segs.push(TreeSegment {
                edge: edge.clone(),
                from: if vb == s { 0.0 } else { 1.0 },
                to: *u,
            });
        }
        Ok(segs)
    }

    /// `beta_x(u)`, refusing to leave the ball.
    pub fn ascending_ray_beta(&self, x: &TreePoint, u: f64) -> Result<TreePoint> {
        if !self.contains(x) {
            return Err(Error::OutsideBall);
        }
        let p = self.pres.ray_point(x, u);
        // The ray between x and p is the geodesic between them; check it stays inside.
        if !self.contains(&p) {
            return Err(Error::OutsideBall);
        }
        Ok(p)
    }

    /// The ray segment `beta_x([from, to])` as tree segments.
    pub fn ray_path(&self, x: &TreePoint, from: f64, to: f64) -> Result<Vec<TreeSegment>> {
        let a = self.ascending_ray_beta(x, from)?;
        let b = self.ascending_ray_beta(x, to)?;
        self.geodesic_sigma(&a, &b)
    }

    pub fn vertex_point(&self, i: usize) -> TreePoint {
        TreePoint::Vertex(self.vertices[i].clone())
    }

    /// CSV rows `source_key,target_key,c_source`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source_key,target_key,c_source\n");
        for (_, s, t) in &self.edges {
            let _ = writeln!(
                out,
                "{},{},{}",
                self.pres.format_vertex(&self.vertices[*s]),
                self.pres.format_vertex(&self.vertices[*t]),
                self.vertices[*s].height()
            );
        }
        out
    }
}
