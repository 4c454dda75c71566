//! Integer and rational linear algebra on `Z^n` / `Q^n`, plus coset tables
//! for full-rank sublattices `L Z^n`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type IVec = Vec<i64>;
pub type QVec = Vec<BigRational>;

/// Square integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        Self { n, data }
    }

    pub fn scalar(n: usize, k: i64) -> Self {
        let mut m = Self::identity(n);
        for v in &mut m.data {
            *v *= k;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "expected a square integer matrix, got {} rows",
                n
            )));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.n + c]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn mul_vec(&self, v: &[i64]) -> IVec {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.get(r, c) * v[c]).sum())
            .collect()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> i64 {
        det_i128(&self.data.iter().map(|&v| v as i128).collect::<Vec<_>>(), self.n) as i64
    }

    /// Adjugate: `self * adj = det * I`.
    pub fn adjugate(&self) -> IMatrix {
        let n = self.n;
        if n == 1 {
            return IMatrix { n, data: vec![1] };
        }
        let mut data = vec![0i64; n * n];
        for r in 0..n {
            for c in 0..n {
                let mut minor = Vec::with_capacity((n - 1) * (n - 1));
                for i in (0..n).filter(|&i| i != r) {
                    for j in (0..n).filter(|&j| j != c) {
                        minor.push(self.get(i, j) as i128);
                    }
                }
                let sign = if (r + c) % 2 == 0 { 1 } else { -1 };
                // adj[c][r] = cofactor(r, c)
                data[c * n + r] = sign * det_i128(&minor, n - 1) as i64;
            }
        }
        IMatrix { n, data }
    }

    pub fn to_rational(&self) -> QMatrix {
        QMatrix {
            n: self.n,
            data: self.data.iter().map(|&v| BigRational::from_integer(v.into())).collect(),
        }
    }
}

fn det_i128(m: &[i128], n: usize) -> i128 {
    if n == 0 {
        return 1;
    }
    let mut a = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k * n + k] == 0 {
            match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                Some(r) => {
                    for c in 0..n {
                        a.swap(k * n + c, r * n + c);
                    }
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
        }
        prev = a[k * n + k];
    }
    sign * a[n * n - 1]
}

/// Square rational matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QMatrix {
    n: usize,
    data: Vec<BigRational>,
}

impl QMatrix {
    pub fn identity(n: usize) -> Self {
        IMatrix::identity(n).to_rational()
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!(
                "expected a square rational matrix, got {} rows",
                n
            )));
        }
        Ok(Self {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Parses rows of `"a/b"` or `"a"` strings.
    pub fn parse_rows(rows: &[Vec<String>]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(parsed)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> &BigRational {
        &self.data[r * self.n + c]
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = BigRational::zero();
                for k in 0..n {
                    acc += self.get(r, k) * other.get(k, c);
                }
                data.push(acc);
            }
        }
        QMatrix { n, data }
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> QVec {
        (0..self.n)
            .map(|r| {
                let mut acc = BigRational::zero();
                for c in 0..self.n {
                    acc += self.get(r, c) * &v[c];
                }
                acc
            })
            .collect()
    }

    pub fn mul_ivec(&self, v: &[i64]) -> QVec {
        let q: QVec = v.iter().map(|&x| BigRational::from_integer(x.into())).collect();
        self.mul_vec(&q)
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<QMatrix> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = QMatrix::identity(n).data;
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r * n + col].is_zero())?;
            if pivot != col {
                for c in 0..n {
                    a.swap(col * n + c, pivot * n + c);
                    inv.swap(col * n + c, pivot * n + c);
                }
            }
            let p = a[col * n + col].clone();
            for c in 0..n {
                a[col * n + c] = &a[col * n + c] / &p;
                inv[col * n + c] = &inv[col * n + c] / &p;
            }
            for r in 0..n {
                if r == col || a[r * n + col].is_zero() {
                    continue;
                }
                let f = a[r * n + col].clone();
                for c in 0..n {
                    let da = &f * &a[col * n + c];
                    let di = &f * &inv[col * n + c];
                    a[r * n + c] -= da;
                    inv[r * n + c] -= di;
                }
            }
        }
        Some(QMatrix { n, data: inv })
    }

    pub fn transpose(&self) -> QMatrix {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(self.get(c, r).clone());
            }
        }
        QMatrix { n, data }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(rational_to_f64).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| (0..self.n).all(|c| self.get(r, c) == self.get(c, r)))
    }

    /// Sylvester's criterion on leading principal minors.
    pub fn is_positive_definite(&self) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        (1..=self.n).all(|k| {
            let mut m = Vec::with_capacity(k * k);
            for r in 0..k {
                for c in 0..k {
                    m.push(self.get(r, c).clone());
                }
            }
            det_rational(m, k).is_positive()
        })
    }

    pub fn rows_as_strings(&self) -> Vec<Vec<String>> {
        self.data
            .chunks(self.n)
            .map(|r| r.iter().map(|q| q.to_string()).collect())
            .collect()
    }
}

fn det_rational(mut a: Vec<BigRational>, n: usize) -> BigRational {
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r * n + col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            det = -det;
        }
        let p = a[col * n + col].clone();
        det *= &p;
        for r in col + 1..n {
            let f = &a[r * n + col] / &p;
            for c in col..n {
                let d = &f * &a[col * n + c];
                a[r * n + c] -= d;
            }
        }
    }
    det
}

impl fmt::Display for QMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .data
            .chunks(self.n)
            .map(|r| r.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "[{}]", rows.join(";"))
    }
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().map_err(|_| bad_rational(s))?;
            let b: BigInt = b.trim().parse().map_err(|_| bad_rational(s))?;
            if b.is_zero() {
                return Err(bad_rational(s));
            }
            BigRational::new(a, b)
        }
        None => BigRational::from_integer(s.parse().map_err(|_| bad_rational(s))?),
    };
    Ok(parsed)
}

fn bad_rational(s: &str) -> Error {
    Error::Invalid(format!("cannot parse rational {s:?}"))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        // huge numerators/denominators: shift both down before dividing
        _ => {
            let nb = q.numer().bits() as i64;
            let db = q.denom().bits() as i64;
            let shift = (nb.max(db) - 900).max(0) as usize;
            let a = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let b = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            a / b
        }
    }
}

/// Canonical coset representatives of a full-rank sublattice `L Z^n` in `Z^n`.
///
/// Representatives are the lexicographically least members of each class in
/// the box `[0, |det L|)^n`; the zero class is represented by the zero vector.
#[derive(Clone, Debug)]
pub struct CosetTable {
    lattice: IMatrix,
    adj: IMatrix,
    det: i64,
    reps: Vec<IVec>,
    by_class: HashMap<IVec, usize>,
}

impl CosetTable {
    pub fn new(lattice: IMatrix) -> Result<Self> {
        let det = lattice.det();
        if det == 0 {
            return Err(Error::SingularMatrix("lattice"));
        }
        let adj = lattice.adjugate();
        let n = lattice.dim();
        let k = det.abs();
        let mut table = Self {
            lattice,
            adj,
            det,
            reps: Vec::new(),
            by_class: HashMap::new(),
        };
        let mut v = vec![0i64; n];
        loop {
            let key = table.class_key(&v);
            if !table.by_class.contains_key(&key) {
                table.by_class.insert(key, table.reps.len());
                table.reps.push(v.clone());
            }
            // odometer over [0, k)^n, last coordinate fastest (lexicographic order)
            let mut i = n;
            loop {
                if i == 0 {
                    debug_assert_eq!(table.reps.len() as i64, k);
                    return Ok(table);
                }
                i -= 1;
                v[i] += 1;
                if v[i] < k {
                    break;
                }
                v[i] = 0;
            }
        }
    }

    fn class_key(&self, v: &[i64]) -> IVec {
        let m = self.det.abs();
        self.adj.mul_vec(v).into_iter().map(|x| x.rem_euclid(m)).collect()
    }

    pub fn lattice(&self) -> &IMatrix {
        &self.lattice
    }

    pub fn index(&self) -> usize {
        self.reps.len()
    }

    pub fn reps(&self) -> &[IVec] {
        &self.reps
    }

    /// Splits `v = rep + L u`.
    pub fn decompose(&self, v: &[i64]) -> (IVec, IVec) {
        let rep = self.reps[self.by_class[&self.class_key(v)]].clone();
        let diff: IVec = v.iter().zip(&rep).map(|(a, b)| a - b).collect();
        let u = self
            .adj
            .mul_vec(&diff)
            .into_iter()
            .map(|x| {
                debug_assert_eq!(x % self.det, 0);
                x / self.det
            })
            .collect();
        (rep, u)
    }

    pub fn rep_of(&self, v: &[i64]) -> IVec {
        self.reps[self.by_class[&self.class_key(v)]].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn det_and_adjugate() {
        let m = IMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap();
        assert_eq!(m.det(), 1);
        let m3 = IMatrix::from_rows(&[vec![2, 0, 1], vec![1, 3, 0], vec![0, 1, 4]]).unwrap();
        assert_eq!(m3.det(), 2 * 12 - 0 + 1 * 1);
        let adj = m3.adjugate();
        for r in 0..3 {
            for c in 0..3 {
                let prod: i64 = (0..3).map(|k| m3.get(r, k) * adj.get(k, c)).sum();
                assert_eq!(prod, if r == c { m3.det() } else { 0 });
            }
        }
        assert_eq!(IMatrix::from_rows(&[vec![1, 2], vec![2, 4]]).unwrap().det(), 0);
    }

    #[test]
    fn coset_table_of_2z() {
        let t = CosetTable::new(IMatrix::scalar(1, 2)).unwrap();
        assert_eq!(t.reps(), &[vec![0], vec![1]]);
        assert_eq!(t.decompose(&[7]), (vec![1], vec![3]));
        assert_eq!(t.decompose(&[-3]), (vec![1], vec![-2]));
        assert_eq!(t.decompose(&[0]), (vec![0], vec![0]));
    }

    #[test]
    fn coset_table_negative_det() {
        let t = CosetTable::new(IMatrix::scalar(1, -3)).unwrap();
        assert_eq!(t.index(), 3);
        let (rep, u) = t.decompose(&[10]);
        assert_eq!(rep, vec![1]);
        assert_eq!(u, vec![-3]);
    }

    #[test]
    fn coset_table_2d_exhaustive() {
        let l = IMatrix::from_rows(&[vec![2, 1], vec![0, 3]]).unwrap();
        let t = CosetTable::new(l.clone()).unwrap();
        assert_eq!(t.index(), 6);
        assert_eq!(t.reps()[0], vec![0, 0]);
        for a in -7..7 {
            for b in -7..7 {
                let (rep, u) = t.decompose(&[a, b]);
                let back: Vec<i64> = l.mul_vec(&u).iter().zip(&rep).map(|(x, y)| x + y).collect();
                assert_eq!(back, vec![a, b]);
                assert!(t.reps().contains(&rep));
            }
        }
    }

    #[test]
    fn rational_inverse_and_pd() {
        let m = QMatrix::from_rows(vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(1, 1)]]).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), QMatrix::identity(2));
        assert!(m.is_positive_definite());
        let bad = QMatrix::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(1, 1)]]).unwrap();
        assert!(!bad.is_positive_definite());
        assert_eq!(parse_rational(" 3/6 ").unwrap(), q(1, 2));
        assert!(parse_rational("1/0").is_err());
    }
}
