//! The warped space `Y`: `R^n x R` cut into strips `s in [i, i+1)`, each a
//! flat product with horizontal cost `|phi^-i dx|_B` and vertical cost `|ds|`.
//! The group acts by `(v, k) . (y, s) = (v + phi^k y, k + s)`, which maps
//! strip `i` isometrically onto strip `i + k`.

use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, Presentation};
use crate::lattice::{rational_to_f64, QMatrix, QVec};

/// Slack used when testing window membership of floating-point inputs.
const WINDOW_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YPoint {
    pub x: Vec<f64>,
    pub s: f64,
}

impl YPoint {
    pub fn new(x: Vec<f64>, s: f64) -> Self {
        Self { x, s }
    }

    pub fn origin(n: usize) -> Self {
        Self { x: vec![0.0; n], s: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.s.is_finite() && self.x.iter().all(|v| v.is_finite())
    }
}

/// Exact point of `Y`, for the rational form of the action.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct YPointQ {
    pub x: QVec,
    pub s: BigRational,
}

impl YPointQ {
    pub fn to_f64(&self) -> YPoint {
        YPoint {
            x: self.x.iter().map(rational_to_f64).collect(),
            s: rational_to_f64(&self.s),
        }
    }
}

/// Axis-aligned box in `(x, s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub s_lo: f64,
    pub s_hi: f64,
}

impl Window {
    /// `[-x_half, x_half]^n x [-s_max, s_max]`.
    pub fn symmetric(n: usize, x_half: f64, s_max: f64) -> Self {
        Self {
            x_lo: vec![-x_half; n],
            x_hi: vec![x_half; n],
            s_lo: -s_max,
            s_hi: s_max,
        }
    }

    /// Smallest box holding `j_N(g) . origin` for `g` in the word ball of
    /// `radius`, widened by `margin` horizontally, by 1/2 below and by
    /// `s_extra` above (room for the ascending legs of paths).
    pub fn around_orbit(pres: &Presentation, radius: usize, margin: f64, s_extra: f64) -> Result<Self> {
        let n = pres.rank();
        let mut w = Self::symmetric(n, 0.0, 0.0);
        for (g, _) in pres.ball(radius)?.iter() {
            let j = pres.j_n(g);
            for (i, v) in j.v_f64().into_iter().enumerate() {
                w.x_lo[i] = w.x_lo[i].min(v);
                w.x_hi[i] = w.x_hi[i].max(v);
            }
            w.s_lo = w.s_lo.min(j.k as f64);
            w.s_hi = w.s_hi.max(j.k as f64);
        }
        w.x_lo.iter_mut().for_each(|v| *v -= margin);
        w.x_hi.iter_mut().for_each(|v| *v += margin);
        w.s_lo -= 0.5;
        w.s_hi += s_extra;
        Ok(w)
    }

    pub fn contains(&self, p: &YPoint) -> bool {
        p.x.len() == self.x_lo.len()
            && p.s >= self.s_lo - WINDOW_EPS
            && p.s <= self.s_hi + WINDOW_EPS
            && p.x
                .iter()
                .zip(self.x_lo.iter().zip(&self.x_hi))
                .all(|(v, (lo, hi))| *v >= lo - WINDOW_EPS && *v <= hi + WINDOW_EPS)
    }

    /// Strips met by the window, inclusive.
    pub fn strip_range(&self) -> (i64, i64) {
        (self.s_lo.floor() as i64, self.s_hi.floor() as i64)
    }
}

/// Presentation plus the data fixing the metric on `Y`.
#[derive(Clone, Debug)]
pub struct YModel {
    presentation: Arc<Presentation>,
    base_metric: QMatrix,
    grid_step: f64,
    window: Window,
    phi_inv_f: Vec<f64>,
    base_f: Vec<f64>,
    /// Gram matrices of strips `strip_lo ..= strip_lo + len - 1`.
    strip_lo: i64,
    grams: Vec<Vec<f64>>,
}

/// Default half-height of the window.
pub const DEFAULT_S_MAX: f64 = 8.0;

impl YModel {
    pub fn new(
        presentation: Arc<Presentation>,
        base_metric: QMatrix,
        grid_step: f64,
        window: Window,
    ) -> Result<Self> {
        let n = presentation.rank();
        if base_metric.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "base metric is {0}x{0}, rank is {n}",
                base_metric.dim()
            )));
        }
        if !base_metric.is_symmetric() || !base_metric.is_positive_definite() {
            return Err(Error::Invalid("base metric must be symmetric positive definite".into()));
        }
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(Error::DegenerateGrid(format!("grid step {grid_step} must be positive")));
        }
        if window.x_lo.len() != n || window.x_hi.len() != n {
            return Err(Error::DimensionMismatch("window dimension differs from rank".into()));
        }
        let ok_box = window.s_lo < window.s_hi
            && window.x_lo.iter().zip(&window.x_hi).all(|(a, b)| a < b);
        if !ok_box {
            return Err(Error::DegenerateGrid("empty window".into()));
        }
        let phi_inv_f = presentation.phi_inv().to_f64();
        let base_f = base_metric.to_f64();
        let (lo, hi) = window.strip_range();
        let mut model = Self {
            presentation,
            base_metric,
            grid_step,
            window,
            phi_inv_f,
            base_f,
            strip_lo: lo - 1,
            grams: Vec::new(),
        };
        model.grams = (lo - 1..=hi + 1).map(|i| model.compute_gram(i)).collect();
        Ok(model)
    }

    /// Identity base metric.
    pub fn standard(presentation: Arc<Presentation>, grid_step: f64, window: Window) -> Result<Self> {
        let n = presentation.rank();
        Self::new(presentation, QMatrix::identity(n), grid_step, window)
    }

    pub fn presentation(&self) -> &Arc<Presentation> {
        &self.presentation
    }

    pub fn rank(&self) -> usize {
        self.presentation.rank()
    }

    pub fn base_metric(&self) -> &QMatrix {
        &self.base_metric
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn with_grid_step(&self, h: f64) -> Result<Self> {
        Self::new(self.presentation.clone(), self.base_metric.clone(), h, self.window.clone())
    }

    // A^T B A with A = phi^-i, in f64.
    fn compute_gram(&self, i: i64) -> Vec<f64> {
        let n = self.rank();
        let step = if i >= 0 {
            self.phi_inv_f.clone()
        } else {
            self.presentation.phi().to_f64()
        };
        let mut a = identity_f(n);
        for _ in 0..i.unsigned_abs() {
            a = mat_mul(&a, &step, n);
        }
        let ba = mat_mul(&self.base_f, &a, n);
        mat_mul(&transpose(&a, n), &ba, n)
    }

    /// Gram matrix `(phi^-i)^T B phi^-i` of strip `i`, row-major.
    pub fn strip_gram(&self, i: i64) -> std::borrow::Cow<'_, [f64]> {
        let k = i - self.strip_lo;
        if k >= 0 && (k as usize) < self.grams.len() {
            std::borrow::Cow::Borrowed(&self.grams[k as usize])
        } else {
            std::borrow::Cow::Owned(self.compute_gram(i))
        }
    }

    /// `|dx|` measured in strip `i`.
    pub fn horizontal_norm(&self, i: i64, dx: &[f64]) -> f64 {
        quad_form(&self.strip_gram(i), dx).max(0.0).sqrt()
    }

    /// Length of the straight segment from `a` to `b` under the strip law.
    /// The result does not depend on the order of the endpoints.
    pub fn segment_length(&self, a: &YPoint, b: &YPoint) -> f64 {
        let (a, b) = if canonical_le(a, b) { (a, b) } else { (b, a) };
        let dx: Vec<f64> = b.x.iter().zip(&a.x).map(|(p, q)| p - q).collect();
        let ds = b.s - a.s;
        if ds == 0.0 {
            if dx.iter().all(|v| *v == 0.0) {
                return 0.0;
            }
            let i = a.s.floor() as i64;
            let here = self.horizontal_norm(i, &dx);
            // a seam may be travelled just inside either neighbouring strip
            return if a.s == a.s.floor() {
                here.min(self.horizontal_norm(i - 1, &dx))
            } else {
                here
            };
        }
        let (s0, s1) = if ds > 0.0 { (a.s, b.s) } else { (b.s, a.s) };
        let total = s1 - s0;
        let mut cost = 0.0;
        let mut lo = s0;
        while lo < s1 {
            let i = lo.floor() as i64;
            let hi = ((i + 1) as f64).min(s1);
            let frac = (hi - lo) / total;
            let part: Vec<f64> = dx.iter().map(|v| v * frac).collect();
            let h = self.horizontal_norm(i, &part);
            cost += ((hi - lo) * (hi - lo) + h * h).sqrt();
            lo = hi;
        }
        cost
    }

    /// Length of a polyline under the strip law.
    pub fn polyline_length(&self, pts: &[YPoint]) -> f64 {
        pts.windows(2).map(|w| self.segment_length(&w[0], &w[1])).sum()
    }

    /// Splits `a -> b` at every integer height crossed, so each piece lies in one strip.
    pub fn split_at_seams(&self, a: &YPoint, b: &YPoint) -> Vec<YPoint> {
        let mut out = vec![a.clone()];
        if a.s != b.s {
            let (lo, hi) = (a.s.min(b.s), a.s.max(b.s));
            let mut cuts: Vec<f64> = ((lo.floor() as i64 + 1)..=(hi.ceil() as i64 - 1))
                .map(|i| i as f64)
                .filter(|c| *c > lo && *c < hi)
                .collect();
            if b.s < a.s {
                cuts.reverse();
            }
            for c in cuts {
                let f = (c - a.s) / (b.s - a.s);
                let x = a.x.iter().zip(&b.x).map(|(p, q)| p + f * (q - p)).collect();
                out.push(YPoint { x, s: c });
            }
        }
        out.push(b.clone());
        out
    }

    /// `g . p` in floating point.
    pub fn act_y(&self, g: &GroupElement, p: &YPoint) -> YPoint {
        let j = self.presentation.j_n(g);
        let pk = self.presentation.phi_pow(j.k).to_f64();
        let n = self.rank();
        let v = j.v_f64();
        let x = (0..n)
            .map(|r| v[r] + (0..n).map(|c| pk[r * n + c] * p.x[c]).sum::<f64>())
            .collect();
        YPoint { x, s: p.s + j.k as f64 }
    }

    /// `g . p` exactly.
    pub fn act_y_exact(&self, g: &GroupElement, p: &YPointQ) -> YPointQ {
        act_y_exact(&self.presentation, g, p)
    }

    pub fn in_window(&self, p: &YPoint) -> bool {
        self.window.contains(p)
    }
}

/// `g . p` exactly, without a metric model.
pub fn act_y_exact(pres: &Presentation, g: &GroupElement, p: &YPointQ) -> YPointQ {
    let j = pres.j_n(g);
    let moved = pres.phi_pow(j.k).mul_vec(&p.x);
    YPointQ {
        x: j.v.iter().zip(moved).map(|(a, b)| a + b).collect(),
        s: &p.s + BigRational::from_integer(j.k.into()),
    }
}

/// The height `b(y, s) = s`.
pub fn height_b(p: &YPoint) -> f64 {
    p.s
}

/// `u -> (x, s + u)`, a unit-speed vertical geodesic.
pub fn vertical_ray_alpha(p: &YPoint, u: f64) -> YPoint {
    YPoint { x: p.x.clone(), s: p.s + u }
}

fn canonical_le(a: &YPoint, b: &YPoint) -> bool {
    match a.s.total_cmp(&b.s) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => {
            for (p, q) in a.x.iter().zip(&b.x) {
                match p.total_cmp(q) {
                    std::cmp::Ordering::Less => return true,
                    std::cmp::Ordering::Greater => return false,
                    _ => {}
                }
            }
            true
        }
    }
}

pub(crate) fn quad_form(g: &[f64], v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            acc += v[r] * g[r * n + c] * v[c];
        }
    }
    acc
}

fn identity_f(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c] = (0..n).map(|k| a[r * n + k] * b[k * n + c]).sum();
        }
    }
    out
}

fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[c * n + r] = a[r * n + c];
        }
    }
    out
}
