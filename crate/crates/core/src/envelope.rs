//! Tightest affine envelopes of a finite sample, with nonnegative constants.
//!
//! Both fits anchor at the largest abscissa: among all valid lines they take
//! the best value there, then the smallest constant term. Each is a two-variable
//! LP whose optimum is attained at the rightmost sample, so it reduces to one
//! pass over the slopes into that point.

/// `y >= c x - d` on every sample, `c, d >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerLine {
    pub c: f64,
    pub d: f64,
}

/// `y <= a x + b` on every sample, `a, b >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperLine {
    pub a: f64,
    pub b: f64,
}

impl LowerLine {
    pub fn holds(&self, x: f64, y: f64) -> bool {
        self.c * x - self.d <= y
    }
}

impl UpperLine {
    pub fn holds(&self, x: f64, y: f64) -> bool {
        y <= self.a * x + self.b
    }
}

/// Samples are `(x, y)` with `x >= 0`. Returns `None` on empty input.
pub fn lower_line(pts: &[(f64, f64)]) -> Option<LowerLine> {
    let &(xm, _) = pts.iter().max_by(|a, b| a.0.total_cmp(&b.0))?;
    let ym = pts
        .iter()
        .filter(|p| p.0 == xm)
        .map(|p| p.1)
        .min_by(f64::total_cmp)?;
    // d >= 0 is the constraint that the line passes below the origin
    let mut c: f64 = if xm > 0.0 { ym / xm } else { 0.0 };
    for &(x, y) in pts {
        if x < xm {
            c = c.max((ym - y) / (xm - x));
        }
    }
    let c = c.max(0.0);
    Some(LowerLine { c, d: settle(pts, |x, y| c * x - y, |d, x, y| c * x - d <= y) })
}

pub fn upper_line(pts: &[(f64, f64)]) -> Option<UpperLine> {
    let &(xm, _) = pts.iter().max_by(|a, b| a.0.total_cmp(&b.0))?;
    let ym = pts
        .iter()
        .filter(|p| p.0 == xm)
        .map(|p| p.1)
        .max_by(f64::total_cmp)?;
    let mut a = if xm > 0.0 { ym / xm } else { 0.0 };
    for &(x, y) in pts {
        if x < xm {
            a = a.min((ym - y) / (xm - x));
        }
    }
    // a negative slope means the maximum sits left of xm; the flat line is optimal
    let a = a.max(0.0);
    Some(UpperLine { a, b: settle(pts, |x, y| y - a * x, |b, x, y| y <= a * x + b) })
}

// Smallest nonnegative constant meeting `need`, nudged until every sample
// passes `ok` in floating point.
fn settle(pts: &[(f64, f64)], need: impl Fn(f64, f64) -> f64, ok: impl Fn(f64, f64, f64) -> bool) -> f64 {
    let mut k = pts.iter().map(|&(x, y)| need(x, y)).fold(0.0f64, f64::max);
    while !pts.iter().all(|&(x, y)| ok(k, x, y)) {
        k = if k == 0.0 { f64::MIN_POSITIVE } else { k * (1.0 + 4.0 * f64::EPSILON) };
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_through_origin() {
        let pts: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 2.0 * k as f64)).collect();
        assert_eq!(lower_line(&pts), Some(LowerLine { c: 2.0, d: 0.0 }));
        assert_eq!(upper_line(&pts), Some(UpperLine { a: 2.0, b: 0.0 }));
    }

    #[test]
    fn offsets_are_minimal() {
        let pts = vec![(0.0, 0.0), (1.0, 3.0), (2.0, 1.0), (4.0, 5.0)];
        let lo = lower_line(&pts).unwrap();
        // slopes into (4, 5): 5/4, 2/3, 2; the steepest wins
        assert_eq!(lo.c, 2.0);
        assert_eq!(lo.d, 3.0);
        let up = upper_line(&pts).unwrap();
        assert!((up.a - 2.0 / 3.0).abs() < 1e-15);
        assert!(pts.iter().all(|p| lo.holds(p.0, p.1) && up.holds(p.0, p.1)));
    }

    #[test]
    fn flat_upper_when_max_is_inside() {
        let pts = vec![(0.0, 0.0), (1.0, 9.0), (3.0, 2.0)];
        assert_eq!(upper_line(&pts), Some(UpperLine { a: 0.0, b: 9.0 }));
    }

    #[test]
    fn validity_survives_rounding() {
        let pts: Vec<(f64, f64)> = (1..500).map(|k| ((k as f64).sqrt(), (k as f64).ln() * 0.1 + 0.3)).collect();
        let lo = lower_line(&pts).unwrap();
        let up = upper_line(&pts).unwrap();
        assert!(pts.iter().all(|p| lo.holds(p.0, p.1) && up.holds(p.0, p.1)));
        assert!(lower_line(&[]).is_none());
    }
}
