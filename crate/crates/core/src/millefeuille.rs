//! The fibre product `M = {(x, y) in T x Y : c(x) = b(y)}` with the sum metric
//! `d = d_T + d_Y`, the two-leg path construction bounding the induced path
//! metric `d_M`, the diagonal action, and the finite properness / cocompactness
//! / quasi-isometry probes.
//!
//! Leg one moves the tree point along its geodesic while the `Y` point rides
//! the vertical line above it, so it has length exactly `2 d_T`. Leg two
//! follows a `Y` geodesic while the tree point rides the monotone ray through
//! the target, so its length is the `Y` length plus the total height variation.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bass_serre::{TreeBall, TreePoint, TreeSegment, VertexKey};
use crate::envelope::{lower_line, upper_line};
use crate::error::{Error, Result};
use crate::group::{GroupElement, NTilde, Presentation};
use crate::y_grid::{YGrid, YPath};
use crate::y_space::{act_y_exact, height_b, YModel, YPoint, YPointQ};

/// Tolerance on `|c - b|` for floating-point samples along paths. Points built
/// from dyadic data meet the constraint exactly.
pub const FIBRE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct MPoint {
    pub tree: TreePoint,
    pub y: YPoint,
}

impl MPoint {
    pub fn fibre_gap(&self) -> f64 {
        (self.tree.height() - height_b(&self.y)).abs()
    }
}

pub fn make_mpoint(tree: TreePoint, y: YPoint) -> Result<MPoint> {
    let (c, b) = (tree.height(), height_b(&y));
    if !((c - b).abs() <= FIBRE_TOL) {
        return Err(Error::FibreMismatch { c, b });
    }
    Ok(MPoint { tree, y })
}

/// `g . m` with no ball or window check.
pub fn act_m_unchecked(model: &YModel, g: &GroupElement, m: &MPoint) -> MPoint {
    MPoint {
        tree: model.presentation().act_tree_point(g, &m.tree),
        y: model.act_y(g, &m.y),
    }
}

/// Path from `m0` to `m1` inside `M`, in two legs.
#[derive(Clone, Debug, Default)]
pub struct MPath {
    /// tree geodesic of leg one; the `Y` point stays above `anchor_x`
    pub theta1: Vec<TreeSegment>,
    pub anchor_x: Vec<f64>,
    /// `Y` geodesic of leg two; the tree point rides the ray through `ray_base`
    pub theta2: YPath,
    pub ray_base: Option<TreePoint>,
    pub theta1_length: f64,
    pub theta2_length: f64,
}

impl MPath {
    pub fn is_empty(&self) -> bool {
        self.theta1.is_empty() && self.theta2.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.theta1_length + self.theta2_length
    }

    /// Points along both legs, `per_piece` samples on every tree segment and
    /// every `Y` piece, endpoints included.
    pub fn sample(&self, pres: &Presentation, per_piece: usize) -> Vec<MPoint> {
        let k = per_piece.max(1);
        let mut out = Vec::new();
        for seg in &self.theta1 {
            for i in 0..=k {
                let u = seg.from + (seg.to - seg.from) * (i as f64 / k as f64);
                let tree = pres
                    .tree_point(seg.edge.clone(), u.clamp(0.0, 1.0))
                    .expect("parameter clamped to [0, 1]");
                let s = tree.height();
                out.push(MPoint {
                    tree,
                    y: YPoint { x: self.anchor_x.clone(), s },
                });
            }
        }
        if let Some(base) = &self.ray_base {
            let c = base.height();
            let pts = self.theta2.points();
            for w in pts.windows(2) {
                for i in 0..=k {
                    let f = i as f64 / k as f64;
                    let y = YPoint {
                        x: w[0].x.iter().zip(&w[1].x).map(|(a, b)| a + f * (b - a)).collect(),
                        s: w[0].s + f * (w[1].s - w[0].s),
                    };
                    out.push(MPoint { tree: pres.ray_point(base, y.s - c), y });
                }
            }
        }
        out
    }
}

/// Outcome of the finite properness certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProperReport {
    pub radius: usize,
    pub elements: usize,
    pub collisions: usize,
    /// `min_displacement_by_length[r]` is the least lower-bracket displacement
    /// of the base point over the sphere of radius `r`
    pub min_displacement_by_length: Vec<f64>,
    pub displacement_nondecreasing: bool,
}

/// Affine bounds of orbit distances against word length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QIFit {
    pub a_upper: f64,
    pub b_upper: f64,
    pub a_lower: f64,
    pub b_lower: f64,
    pub sample_count: usize,
}

impl QIFit {
    pub fn success(&self) -> bool {
        self.a_lower > 0.0
    }
}

/// A tree ball and a `Y` grid over one presentation.
#[derive(Clone, Debug)]
pub struct MSpace {
    ball: TreeBall,
    grid: YGrid,
}

impl MSpace {
    pub fn new(ball: TreeBall, grid: YGrid) -> Result<Self> {
        if ball.presentation().to_doc() != grid.model().presentation().to_doc() {
            return Err(Error::Invalid("tree ball and grid use different presentations".into()));
        }
        Ok(Self { ball, grid })
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        self.ball.presentation()
    }

    pub fn ball(&self) -> &TreeBall {
        &self.ball
    }

    pub fn grid(&self) -> &YGrid {
        &self.grid
    }

    pub fn model(&self) -> &YModel {
        self.grid.model()
    }

    pub fn kappa(&self) -> f64 {
        self.grid.kappa()
    }

    /// `(base vertex, origin)`.
    pub fn base_point(&self) -> MPoint {
        MPoint {
            tree: TreePoint::Vertex(VertexKey::base()),
            y: YPoint::origin(self.presentation().rank()),
        }
    }

    pub fn contains(&self, m: &MPoint) -> bool {
        self.ball.contains(&m.tree) && self.model().in_window(&m.y)
    }

    fn check(&self, m: &MPoint) -> Result<()> {
        if !self.ball.contains(&m.tree) {
            return Err(Error::OutsideBall);
        }
        if !self.model().in_window(&m.y) {
            return Err(Error::OutsideWindow);
        }
        Ok(())
    }

    pub fn act_m(&self, g: &GroupElement, m: &MPoint) -> Result<MPoint> {
        let out = act_m_unchecked(self.model(), g, m);
        self.check(&out)?;
        Ok(out)
    }

    /// `(lower, upper)` for `d_T + d_Y`; the tree part is exact.
    pub fn product_distance(&self, m0: &MPoint, m1: &MPoint) -> Result<(f64, f64)> {
        self.check(m0)?;
        self.check(m1)?;
        let dt = self.ball.tree_distance(&m0.tree, &m1.tree)?;
        let (lo, hi) = self.grid.y_distance(&m0.y, &m1.y)?;
        Ok((dt + lo, dt + hi))
    }

    pub fn connect_theta(&self, m0: &MPoint, m1: &MPoint) -> Result<MPath> {
        Ok(self.connect_theta_many(m0, std::slice::from_ref(m1))?.pop().expect("one target"))
    }

    /// `connect_theta(m0, m)` for every target, sharing grid searches between
    /// targets at equal height.
    pub fn connect_theta_many(&self, m0: &MPoint, targets: &[MPoint]) -> Result<Vec<MPath>> {
        self.check(m0)?;
        let mut by_height: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, m) in targets.iter().enumerate() {
            self.check(m)?;
            by_height.entry(m.y.s.to_bits()).or_default().push(i);
        }
        let mut out: Vec<Option<MPath>> = vec![None; targets.len()];
        for (bits, idx) in by_height {
            let y2 = YPoint { x: m0.y.x.clone(), s: f64::from_bits(bits) };
            let ys: Vec<YPoint> = idx.iter().map(|&i| targets[i].y.clone()).collect();
            let paths = self.grid.geodesics_from(&y2, &ys)?;
            for (&i, sigma_y) in idx.iter().zip(paths) {
                out[i] = Some(self.assemble(m0, &targets[i], sigma_y)?);
            }
        }
        Ok(out.into_iter().map(|p| p.expect("every target visited")).collect())
    }

    fn assemble(&self, m0: &MPoint, m1: &MPoint, sigma_y: YPath) -> Result<MPath> {
        if m0 == m1 {
            return Ok(MPath::default());
        }
        let theta1 = self.ball.geodesic_sigma(&m0.tree, &m1.tree)?;
        // c changes at unit rate along every edge, so the vertical leg matches d_T
        let theta1_length = 2.0 * theta1.iter().map(TreeSegment::length).sum::<f64>();
        let mut path = MPath {
            theta1,
            anchor_x: m0.y.x.clone(),
            theta1_length,
            ..MPath::default()
        };
        if sigma_y.is_empty() {
            return Ok(path);
        }
        let c1 = m1.tree.height();
        let (lo, hi) = sigma_y
            .points()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.s), b.max(p.s)));
        for u in [lo - c1, hi - c1] {
            self.ball.ascending_ray_beta(&m1.tree, u).map_err(|e| match e {
                Error::OutsideBall => Error::PathEscapesWindow,
                other => other,
            })?;
        }
        let variation: f64 = sigma_y.points().windows(2).map(|w| (w[1].s - w[0].s).abs()).sum();
        path.theta2_length = sigma_y.length() + variation;
        path.theta2 = sigma_y;
        path.ray_base = Some(m1.tree.clone());
        Ok(path)
    }

    pub fn dm_upper(&self, m0: &MPoint, m1: &MPoint) -> Result<f64> {
        Ok(self.connect_theta(m0, m1)?.total_length())
    }

    /// Tree point on an edge leaving the base vertex (or the base vertex),
    /// height in `[0, 1]`, `x` in `[0, 1)^n`.
    pub fn is_normalized(&self, m: &MPoint) -> bool {
        let pres = self.presentation();
        let tree_ok = match &m.tree {
            TreePoint::Vertex(v) => v.is_base(),
            TreePoint::Interior { edge, .. } => pres.edge_source(edge).is_base(),
        };
        let h = m.tree.height();
        tree_ok && (0.0..=1.0).contains(&h) && m.y.x.iter().all(|v| (0.0..1.0).contains(v))
    }

    /// Moves `m` into the fundamental region: first the edge carrying the tree
    /// point goes to the base edge, then a base translation brings `x` into
    /// the unit cell. The translation fixes the base vertex but only the
    /// sublattice `i2(Z^n)` fixes the base edge, so the result lies on some
    /// edge leaving the base vertex.
    pub fn normalize_to_fundamental_domain(&self, m: &MPoint) -> Result<(GroupElement, MPoint)> {
        self.check(m)?;
        let pres = self.presentation();
        if self.is_normalized(m) {
            return Ok((pres.identity(), m.clone()));
        }
        let edge = match &m.tree {
            TreePoint::Vertex(v) => pres.canonical_up_edge(v),
            TreePoint::Interior { edge, .. } => edge.clone(),
        };
        let to_base = pres.multiply(&pres.t(), &pres.inverse(&pres.edge_element(&edge)));
        let exact = YPointQ {
            x: m.y.x.iter().map(|v| exact_rational(*v)).collect::<Result<Vec<_>>>()?,
            s: exact_rational(m.y.s)?,
        };
        let moved = act_y_exact(pres, &to_base, &exact);
        let shift: Vec<i64> = moved
            .x
            .iter()
            .map(|q| q.floor().to_integer().to_i64().map(|v| -v))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Invalid("coordinate too large to normalize".into()))?;
        let g = pres.multiply(&pres.base_element(shift), &to_base);
        let y_exact = act_y_exact(pres, &g, &exact);
        let mut y = y_exact.to_f64();
        for v in &mut y.x {
            // a residue just below 1 may round up to 1 in f64
            if *v >= 1.0 {
                *v = 1.0f64.next_down();
            }
        }
        let out = MPoint { tree: pres.act_tree_point(&g, &m.tree), y };
        if !self.is_normalized(&out) {
            return Err(Error::Invalid("normalization left the fundamental region".into()));
        }
        Ok((g, out))
    }

    /// Injectivity of `g -> (j_N(g), g restricted to the radius-2 tree ball)`
    /// over the word ball, and least displacement of the base point per sphere.
    pub fn properness_probe(&self, radius: usize) -> Result<ProperReport> {
        let pres = self.presentation();
        let ball = pres.ball(radius)?;
        let small = TreeBall::around_base(pres.clone(), 2)?;
        let mut seen: HashMap<(NTilde, Vec<VertexKey>), usize> = HashMap::new();
        let mut collisions = 0;
        for (g, _) in ball.iter() {
            let key = (
                pres.j_n(g),
                small.vertices().iter().map(|v| pres.act_vertex(g, v)).collect(),
            );
            let count = seen.entry(key).or_default();
            if *count > 0 {
                collisions += 1;
            }
            *count += 1;
        }
        let base = self.base_point();
        let elems: Vec<(&GroupElement, usize)> = ball.iter().collect();
        let images = elems
            .iter()
            .map(|(g, _)| self.act_m(g, &base))
            .collect::<Result<Vec<_>>>()?;
        let ys: Vec<YPoint> = images.iter().map(|m| m.y.clone()).collect();
        let dy = self.grid.distances_from(&base.y, &ys)?;
        let mut mins = vec![f64::INFINITY; radius + 1];
        for (((_, len), img), d) in elems.iter().zip(&images).zip(dy) {
            let dt = self.ball.tree_distance(&base.tree, &img.tree)?;
            let lower = dt + d / (1.0 + self.kappa());
            mins[*len] = mins[*len].min(lower);
        }
        let nondecreasing = mins.windows(2).all(|w| w[0] <= w[1]);
        Ok(ProperReport {
            radius,
            elements: ball.len(),
            collisions,
            min_displacement_by_length: mins,
            displacement_nondecreasing: nondecreasing,
        })
    }

    /// Affine bounds for the orbit map `g -> g . base` against word length:
    /// `dM_upper <= a_upper |g| + b_upper` and `d.lower >= a_lower |g| - b_lower`.
    pub fn orbit_qi_fit(&self, radius: usize) -> Result<QIFit> {
        let pres = self.presentation();
        let ball = pres.ball(radius)?;
        let base = self.base_point();
        let elems: Vec<(&GroupElement, usize)> = ball.iter().collect();
        let images = elems
            .iter()
            .map(|(g, _)| self.act_m(g, &base))
            .collect::<Result<Vec<_>>>()?;
        let paths = self.connect_theta_many(&base, &images)?;
        let ys: Vec<YPoint> = images.iter().map(|m| m.y.clone()).collect();
        let dy = self.grid.distances_from(&base.y, &ys)?;
        let mut up = Vec::with_capacity(elems.len());
        let mut lo = Vec::with_capacity(elems.len());
        for (i, (_, len)) in elems.iter().enumerate() {
            let w = *len as f64;
            up.push((w, paths[i].total_length()));
            let dt = self.ball.tree_distance(&base.tree, &images[i].tree)?;
            lo.push((w, dt + dy[i] / (1.0 + self.kappa())));
        }
        let u = upper_line(&up).expect("ball contains the identity");
        let l = lower_line(&lo).expect("ball contains the identity");
        Ok(QIFit {
            a_upper: u.a,
            b_upper: u.b,
            a_lower: l.c,
            b_lower: l.d,
            sample_count: elems.len(),
        })
    }

    /// Random fibre point: a dyadic position on a ball edge whose endpoints
    /// have depth at most `max_depth`, over a dyadic `x` in `[-x_half, x_half]^n`.
    pub fn sample_mpoint<R: Rng>(&self, rng: &mut R, max_depth: usize, x_half: f64) -> MPoint {
        let pres = self.presentation();
        let edges: Vec<usize> = (0..self.ball.edge_count())
            .filter(|&k| {
                let (_, s, t) = &self.ball.edges()[k];
                self.ball.depth_of(*s) <= max_depth && self.ball.depth_of(*t) <= max_depth
            })
            .collect();
        let w = self.model().window();
        let (key, _, _) = &self.ball.edges()[edges[rng.gen_range(0..edges.len())]];
        let u = rng.gen_range(0..64) as f64 / 64.0;
        let tree = pres.tree_point(key.clone(), u).expect("u in [0, 1)");
        let s = tree.height();
        let x = (0..pres.rank())
            .map(|k| {
                let lo = ((-x_half).max(w.x_lo[k]) * 64.0).ceil() as i64;
                let hi = (x_half.min(w.x_hi[k]) * 64.0).floor() as i64;
                rng.gen_range(lo..=hi) as f64 / 64.0
            })
            .collect();
        MPoint { tree, y: YPoint { x, s } }
    }
}

fn exact_rational(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::Invalid(format!("non-finite coordinate {v}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng;
    use crate::y_space::Window;

    fn space() -> MSpace {
        let p = Arc::new(Presentation::baumslag_solitar(1, 2).unwrap());
        let ball = TreeBall::around_base(p.clone(), 5).unwrap();
        let model = YModel::standard(p, 0.1, Window::symmetric(1, 3.0, 6.0)).unwrap();
        MSpace::new(ball, YGrid::new(&model).unwrap()).unwrap()
    }

    #[test]
    fn fibre_examples() {
        let sp = space();
        let p = sp.presentation().clone();
        let base = TreePoint::Vertex(VertexKey::base());
        assert!(make_mpoint(base.clone(), YPoint::origin(1)).is_ok());
        assert!(matches!(
            make_mpoint(base, YPoint::new(vec![0.0], 0.5)),
            Err(Error::FibreMismatch { .. })
        ));
        let mid = p.tree_point(p.base_edge(), 0.5).unwrap();
        assert!(make_mpoint(mid, YPoint::new(vec![0.3], 0.5)).is_ok());
    }

    #[test]
    fn action_examples() {
        let sp = space();
        let p = sp.presentation().clone();
        let m = sp.base_point();
        assert_eq!(sp.act_m(&p.identity(), &m).unwrap(), m);
        let tm = sp.act_m(&p.t(), &m).unwrap();
        assert_eq!(tm.tree, TreePoint::Vertex(p.vertex_of(&p.t())));
        assert_eq!(tm.y, YPoint::new(vec![0.0], 1.0));
    }

    #[test]
    fn product_distance_examples() {
        let sp = space();
        let p = sp.presentation().clone();
        let m = sp.base_point();
        assert_eq!(sp.product_distance(&m, &m).unwrap(), (0.0, 0.0));
        let far = MPoint {
            tree: p.tree_point(p.base_edge(), 1.0).unwrap(),
            y: YPoint::new(vec![0.0], 1.0),
        };
        let (lo, hi) = sp.product_distance(&m, &far).unwrap();
        assert_eq!(hi, 2.0);
        assert!(lo <= hi && lo > 1.8);
    }

    #[test]
    fn theta_paths_respect_bounds() {
        let sp = space();
        let p = sp.presentation().clone();
        let mut r = rng(11);
        let mut checked = 0;
        for _ in 0..40 {
            let a = sp.sample_mpoint(&mut r, 2, 1.5);
            let b = sp.sample_mpoint(&mut r, 2, 1.5);
            let path = match sp.connect_theta(&a, &b) {
                Ok(path) => path,
                Err(Error::PathEscapesWindow) => continue,
                Err(e) => panic!("{e}"),
            };
            let (lo, hi) = sp.product_distance(&a, &b).unwrap();
            let dt = sp.ball().tree_distance(&a.tree, &b.tree).unwrap();
            assert_eq!(path.theta1_length, 2.0 * dt);
            assert!(lo <= path.total_length() + 1e-12);
            assert!(path.total_length() <= 4.0 * (1.0 + sp.kappa()) * hi);
            for q in path.sample(&p, 4) {
                assert!(q.fibre_gap() <= FIBRE_TOL, "{q:?}");
            }
            checked += 1;
        }
        assert!(checked > 20);
        let m = sp.base_point();
        assert!(sp.connect_theta(&m, &m).unwrap().is_empty());
    }

    #[test]
    fn normalization() {
        let sp = space();
        let p = sp.presentation().clone();
        let m = MPoint {
            tree: p.tree_point(p.base_edge(), 0.25).unwrap(),
            y: YPoint::new(vec![0.5], 0.25),
        };
        let (g, out) = sp.normalize_to_fundamental_domain(&m).unwrap();
        assert!(g.is_identity() && out == m);
        let mut r = rng(5);
        for _ in 0..50 {
            let m = sp.sample_mpoint(&mut r, 3, 2.0);
            let (g, out) = sp.normalize_to_fundamental_domain(&m).unwrap();
            assert!(sp.is_normalized(&out));
            assert_eq!(p.act_tree_point(&g, &m.tree), out.tree);
        }
    }

    #[test]
    fn probes_on_small_radius() {
        let sp = space();
        let rep = sp.properness_probe(0).unwrap();
        assert_eq!((rep.elements, rep.collisions), (1, 0));
        let rep = sp.properness_probe(2).unwrap();
        assert_eq!(rep.collisions, 0);
        assert!(rep.displacement_nondecreasing);
        let fit = sp.orbit_qi_fit(2).unwrap();
        assert!(fit.success());
        assert_eq!(fit.sample_count, p_ball_len(&sp, 2));
    }

    fn p_ball_len(sp: &MSpace, r: usize) -> usize {
        sp.presentation().ball(r).unwrap().len()
    }
}
