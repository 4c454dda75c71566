//! Explicit maps of tree balls and group balls into `l^p`, and the empirical
//! exponent of a sample of `(distance, image distance)` pairs.
//!
//! The exponent is read off the compression function
//! `rho(d) = min { |f(x) - f(y)| : d(x, y) >= d }` of the sample: its log-log
//! slope over the upper half of the distance range, rounded down to the
//! `0.01` grid. The affine constants then come from the envelope fits.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bass_serre::{TreeBall, VertexKey};
use crate::envelope::{lower_line, upper_line};
use crate::error::{Error, Result};
use crate::group::{GroupElement, Presentation, WordBall};
use crate::sampling;
use crate::y_space::YModel;

/// Fewest pairs accepted by [`estimate_exponent`].
pub const MIN_PAIRS: usize = 50;

/// Least ratio `d_max / d_min` accepted by [`estimate_exponent`].
pub const MIN_RANGE: f64 = 8.0;

/// Step of the exponent grid.
pub const ALPHA_STEP: f64 = 0.01;

/// Distinct distances beyond this are log-binned before the slope fit.
const MAX_LEVELS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbeddingKind {
    EdgeIndicator,
    WeightedGeodesic { beta: f64 },
    OrbitConcat,
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingKind::EdgeIndicator => write!(f, "edge_indicator"),
            EmbeddingKind::WeightedGeodesic { beta } => write!(f, "weighted_geodesic({beta})"),
            EmbeddingKind::OrbitConcat => write!(f, "orbit_concat"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpec {
    pub kind: EmbeddingKind,
    pub p: f64,
    pub root: VertexKey,
}

impl EmbeddingSpec {
    pub fn new(kind: EmbeddingKind, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Invalid(format!("exponent p = {p} must exceed 1")));
        }
        if let EmbeddingKind::WeightedGeodesic { beta } = kind {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::Invalid(format!("beta = {beta} must lie in (0, 1)")));
            }
        }
        Ok(Self { kind, p, root: VertexKey::base() })
    }

    pub fn with_root(mut self, root: VertexKey) -> Self {
        self.root = root;
        self
    }
}

/// Finitely supported function, sorted by key.
pub type Sparse = Vec<(usize, f64)>;

/// `|a - b|_p^p` for sorted sparse vectors.
pub fn sparse_dist_pow(a: &Sparse, b: &Sparse, p: f64) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() || j < b.len() {
        let ka = a.get(i).map_or(usize::MAX, |e| e.0);
        let kb = b.get(j).map_or(usize::MAX, |e| e.0);
        let diff = if ka == kb {
            i += 1;
            j += 1;
            a[i - 1].1 - b[j - 1].1
        } else if ka < kb {
            i += 1;
            a[i - 1].1
        } else {
            j += 1;
            -b[j - 1].1
        };
        acc += diff.abs().powf(p);
    }
    acc
}

/// Images of tree-ball vertices, indexed like `ball.vertices()`; keys are
/// ball edge indices.
#[derive(Clone, Debug)]
pub struct TreeEmbedding {
    pub spec: EmbeddingSpec,
    pub images: Vec<Sparse>,
}

impl TreeEmbedding {
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        sparse_dist_pow(&self.images[a], &self.images[b], self.spec.p).powf(1.0 / self.spec.p)
    }
}

pub fn embed_tree(spec: &EmbeddingSpec, ball: &TreeBall) -> Result<TreeEmbedding> {
    let root = ball.vertex_index(&spec.root).ok_or(Error::OutsideBall)?;
    let beta = match spec.kind {
        EmbeddingKind::EdgeIndicator => None,
        EmbeddingKind::WeightedGeodesic { beta } => Some(beta),
        EmbeddingKind::OrbitConcat => {
            return Err(Error::Invalid("orbit_concat is not a tree embedding".into()));
        }
    };
    let images = (0..ball.vertex_count())
        .map(|v| {
            let path = ball.vertex_path(root, v);
            let len = path.len();
            let mut img: Sparse = path
                .iter()
                .enumerate()
                .map(|(k, &(_, _, e))| {
                    // edge k ends k + 1 steps from the root, len - k - 1 from v
                    let w = match beta {
                        None => 1.0,
                        Some(b) => (1.0 + (len - k - 1) as f64).powf(b),
                    };
                    (e, w)
                })
                .collect();
            img.sort_by_key(|e| e.0);
            img
        })
        .collect();
    Ok(TreeEmbedding { spec: spec.clone(), images })
}

/// Tree part and `(j_N` in base-metric coordinates`, k)` of a group element.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupImage {
    pub tree: Sparse,
    pub dense: Vec<f64>,
}

/// `g -> embed_tree(vertex_of(g)) (+) (L^T v, k)` where `B = L L^T` and
/// `j_N(g) = (v, k)`, summed in `l^p`.
#[derive(Clone, Debug)]
pub struct GroupEmbedding {
    pres: Arc<Presentation>,
    ball: TreeBall,
    tree: TreeEmbedding,
    chol_t: Vec<f64>,
}

impl GroupEmbedding {
    pub fn image(&self, g: &GroupElement) -> Result<GroupImage> {
        let v = self.ball.vertex_index(&self.pres.vertex_of(g)).ok_or(Error::OutsideBall)?;
        let j = self.pres.j_n(g);
        let n = self.pres.rank();
        let raw = j.v_f64();
        let mut dense: Vec<f64> = (0..n)
            .map(|r| (0..n).map(|c| self.chol_t[r * n + c] * raw[c]).sum())
            .collect();
        dense.push(j.k as f64);
        Ok(GroupImage { tree: self.tree.images[v].clone(), dense })
    }

    pub fn distance(&self, a: &GroupImage, b: &GroupImage) -> f64 {
        let p = self.tree.spec.p;
        let dense: f64 = a.dense.iter().zip(&b.dense).map(|(x, y)| (x - y).abs().powf(p)).sum();
        (sparse_dist_pow(&a.tree, &b.tree, p) + dense).powf(1.0 / p)
    }

    /// The `R^n x Z` part alone.
    pub fn dense_distance(&self, a: &GroupImage, b: &GroupImage) -> f64 {
        let p = self.tree.spec.p;
        a.dense
            .iter()
            .zip(&b.dense)
            .map(|(x, y)| (x - y).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    pub fn p(&self) -> f64 {
        self.tree.spec.p
    }
}

/// Builds the group map; the tree part lives on the ball of radius
/// `tree_radius` around the base vertex, which must contain every vertex later queried.
pub fn embed_group(
    p: f64,
    tree_spec: &EmbeddingSpec,
    model: &YModel,
    tree_radius: usize,
) -> Result<GroupEmbedding> {
    let pres = model.presentation().clone();
    let spec = EmbeddingSpec { p, ..tree_spec.clone() };
    let ball = TreeBall::around_base(pres.clone(), tree_radius)?;
    let tree = embed_tree(&spec, &ball)?;
    let n = pres.rank();
    let b = model.base_metric().to_f64();
    let l = cholesky(&b, n).ok_or_else(|| Error::Invalid("base metric is not positive definite".into()))?;
    let mut chol_t = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            chol_t[r * n + c] = l[c * n + r];
        }
    }
    Ok(GroupEmbedding { pres, ball, tree, chol_t })
}

/// Pairs `(g, g w)` with `g` in `ball` and `1 != w` in `steps`, so the word
/// distance is `|w|` exactly. All of them when at most
/// [`sampling::SAMPLED_PAIRS`], otherwise that many seeded draws.
pub fn group_pairs(
    pres: &Presentation,
    ball: &WordBall,
    steps: &WordBall,
    seed: u64,
) -> Vec<(GroupElement, GroupElement, usize)> {
    let gs: Vec<&GroupElement> = ball.iter().map(|(g, _)| g).collect();
    let ws: Vec<(&GroupElement, usize)> = steps.iter().filter(|(_, l)| *l > 0).collect();
    let total = gs.len() * ws.len();
    let pick = |gi: usize, wi: usize| {
        let (w, l) = ws[wi];
        (gs[gi].clone(), pres.multiply(gs[gi], w), l)
    };
    if total <= sampling::SAMPLED_PAIRS {
        return (0..gs.len()).flat_map(|gi| (0..ws.len()).map(move |wi| (gi, wi))).map(|(a, b)| pick(a, b)).collect();
    }
    let mut r = sampling::rng(seed);
    (0..sampling::SAMPLED_PAIRS)
        .map(|_| {
            let gi = r.gen_range(0..gs.len());
            let wi = r.gen_range(0..ws.len());
            pick(gi, wi)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub alpha_hat: f64,
    pub c_hat: f64,
    pub d_hat: f64,
    pub a_hat: f64,
    pub b_hat: f64,
    pub pair_count: usize,
    pub distance_range: (f64, f64),
    /// raw log-log slope before rounding to the grid
    pub slope: f64,
}

impl ExponentEstimate {
    pub fn lower_holds(&self, d: f64, r: f64) -> bool {
        self.c_hat * d.powf(self.alpha_hat) - self.d_hat <= r
    }

    pub fn upper_holds(&self, d: f64, r: f64) -> bool {
        r <= self.a_hat * d + self.b_hat
    }
}

/// Fits the exponent and both envelopes to `(distance, image distance)` pairs.
/// Pairs at distance zero carry no information and are skipped.
pub fn estimate_exponent(pairs: &[(f64, f64)]) -> Result<ExponentEstimate> {
    let mut pts: Vec<(f64, f64)> = pairs
        .iter()
        .copied()
        .filter(|(d, r)| *d > 0.0 && d.is_finite() && r.is_finite())
        .collect();
    if pts.len() < MIN_PAIRS {
        return Err(Error::InsufficientRange(format!(
            "{} pairs at positive distance, need {MIN_PAIRS}",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (d_min, d_max) = (pts[0].0, pts[pts.len() - 1].0);
    if d_max / d_min < MIN_RANGE {
        return Err(Error::InsufficientRange(format!(
            "distances span [{d_min}, {d_max}], need a factor of {MIN_RANGE}"
        )));
    }
    if pts.iter().all(|p| p.1 == 0.0) {
        return Err(Error::NoValidEnvelope);
    }
    // compression function at each distinct distance, by suffix minima
    let mut levels: Vec<(f64, f64)> = Vec::new();
    let mut run = f64::INFINITY;
    for &(d, r) in pts.iter().rev() {
        run = run.min(r);
        match levels.last_mut() {
            Some(last) if last.0 == d => last.1 = run,
            _ => levels.push((d, run)),
        }
    }
    levels.reverse();
    let slope = compression_slope(&levels, d_min, d_max);
    let alpha_hat = (((slope + 1e-6) / ALPHA_STEP).floor() * ALPHA_STEP).clamp(0.0, 1.0);
    // keep the grid value exact, not a float product
    let alpha_hat = (alpha_hat * 100.0).round() / 100.0;
    let lo: Vec<(f64, f64)> = pts.iter().map(|&(d, r)| (d.powf(alpha_hat), r)).collect();
    let lower = lower_line(&lo).expect("nonempty");
    let upper = upper_line(&pts).expect("nonempty");
    Ok(ExponentEstimate {
        alpha_hat,
        c_hat: lower.c,
        d_hat: lower.d,
        a_hat: upper.a,
        b_hat: upper.b,
        pair_count: pts.len(),
        distance_range: (d_min, d_max),
        slope,
    })
}

fn compression_slope(levels: &[(f64, f64)], d_min: f64, d_max: f64) -> f64 {
    let binned: Vec<(f64, f64)> = if levels.len() > MAX_LEVELS {
        let (l0, l1) = (d_min.ln(), d_max.ln());
        let width = (l1 - l0) / MAX_LEVELS as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut last_bin = usize::MAX;
        for &(d, r) in levels {
            let bin = (((d.ln() - l0) / width) as usize).min(MAX_LEVELS - 1);
            if bin == last_bin {
                *out.last_mut().unwrap() = (d, r);
            } else {
                out.push((d, r));
                last_bin = bin;
            }
        }
        out
    } else {
        levels.to_vec()
    };
    let positive: Vec<(f64, f64)> = binned.into_iter().filter(|l| l.1 > 0.0).collect();
    if positive.len() < 2 {
        return 0.0;
    }
    let mid = (d_min * d_max).sqrt();
    let upper: Vec<(f64, f64)> = positive.iter().copied().filter(|l| l.0 >= mid).collect();
    let fit = if upper.len() >= 2 { upper } else { positive };
    let xs: Vec<f64> = fit.iter().map(|l| l.0.ln()).collect();
    let ys: Vec<f64> = fit.iter().map(|l| l.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// A compression exponent as it enters the product rule: a known value, a
/// named estimate, or the minimum of two others.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    Known(f64),
    Estimate { label: String, value: f64 },
    Min(Box<Exponent>, Box<Exponent>),
}

impl Exponent {
    pub fn value(&self) -> f64 {
        match self {
            Exponent::Known(v) => *v,
            Exponent::Estimate { value, .. } => *value,
            Exponent::Min(a, b) => a.value().min(b.value()),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Known(v) => write!(f, "{v}"),
            Exponent::Estimate { label, value } => write!(f, "{label}={value}"),
            Exponent::Min(a, b) => write!(f, "min({a}, {b})"),
        }
    }
}

/// The exponent of a product is the smaller of the factors' exponents.
pub fn compose_min(a: Exponent, b: Exponent) -> Exponent {
    Exponent::Min(Box::new(a), Box::new(b))
}

fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Some(l)
}
