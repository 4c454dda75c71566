//! Exact arithmetic in `HNN(Z^n, Z^n, i1, i2)` with stable letter `t` and
//! relation `t i1(h) t^-1 = i2(h)`.
//!
//! Elements are kept in Britton-reduced right normal form
//!
//! ```text
//! r_1 t^{e_1} r_2 t^{e_2} ... r_k t^{e_k} g
//! ```
//!
//! where `r_j` is the canonical representative of its class in `Z^n / i2(Z^n)`
//! when `e_j = +1` and in `Z^n / i1(Z^n)` when `e_j = -1`, and `g` is an
//! arbitrary vector of `Z^n` (the `tail`). The form is reduced when no
//! `r_j = 0` sits between opposite letters `t^{-e} r_j t^{e}`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{rational_to_f64, CosetTable, IMatrix, IVec, QMatrix, QVec};

/// Default cap on the number of normal forms a ball enumeration may hold.
pub const DEFAULT_BALL_CAP: usize = 2_000_000;

/// The HNN datum `(n, i1 = m1, i2 = m2, phi)` after validation.
#[derive(Clone, Debug)]
pub struct Presentation {
    n: usize,
    m1: IMatrix,
    m2: IMatrix,
    phi: QMatrix,
    phi_inv: QMatrix,
    /// cosets of i1(Z^n)
    cosets_1: CosetTable,
    /// cosets of i2(Z^n)
    cosets_2: CosetTable,
}

/// Serialized form of a presentation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationDoc {
    pub n: usize,
    pub m1: Vec<Vec<i64>>,
    pub m2: Vec<Vec<i64>>,
    pub phi: Vec<Vec<String>>,
}

impl Presentation {
    /// Checks `det m1, det m2 != 0` and `phi * m1 = m2`, then builds both coset tables.
    pub fn new(m1: IMatrix, m2: IMatrix, phi: QMatrix) -> Result<Self> {
        let n = m1.dim();
        if m2.dim() != n || phi.dim() != n {
            return Err(Error::DimensionMismatch(format!(
                "m1 is {n}x{n}, m2 is {0}x{0}, phi is {1}x{1}",
                m2.dim(),
                phi.dim()
            )));
        }
        if m1.det() == 0 {
            return Err(Error::SingularMatrix("m1"));
        }
        if m2.det() == 0 {
            return Err(Error::SingularMatrix("m2"));
        }
        if phi.mul(&m1.to_rational()) != m2.to_rational() {
            return Err(Error::ConjugacyMismatch);
        }
        let phi_inv = phi.inverse().ok_or(Error::SingularMatrix("phi"))?;
        Ok(Self {
            n,
            cosets_1: CosetTable::new(m1.clone())?,
            cosets_2: CosetTable::new(m2.clone())?,
            m1,
            m2,
            phi,
            phi_inv,
        })
    }

    /// `BS(p, q)`: `t x^p t^-1 = x^q`, with `phi = q/p`.
    pub fn baumslag_solitar(p: i64, q: i64) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::SingularMatrix(if p == 0 { "m1" } else { "m2" }));
        }
        let phi = QMatrix::from_rows(vec![vec![BigRational::new(q.into(), p.into())]])?;
        Self::new(IMatrix::scalar(1, p), IMatrix::scalar(1, q), phi)
    }

    /// Abelian-by-cyclic: `i1 = id`, `i2 = m`, so `phi = m`.
    pub fn abelian_by_cyclic(m: IMatrix) -> Result<Self> {
        let n = m.dim();
        let phi = m.to_rational();
        Self::new(IMatrix::identity(n), m, phi)
    }

    /// Expands `bs:p:q` or `abc:n:a,b;c,d`.
    pub fn from_preset(spec: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("unrecognized preset {spec:?}"));
        let mut parts = spec.splitn(3, ':');
        match parts.next() {
            Some("bs") => {
                let p = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
                let q = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
                Self::baumslag_solitar(p, q)
            }
            Some("abc") => {
                let n: usize = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
                let body = parts.next().ok_or_else(bad)?;
                let rows = body
                    .split(';')
                    .map(|r| {
                        r.split(',')
                            .map(|v| v.trim().parse::<i64>().map_err(|_| bad()))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let m = IMatrix::from_rows(&rows)?;
                if m.dim() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "preset declares n = {n} but matrix is {0}x{0}",
                        m.dim()
                    )));
                }
                Self::abelian_by_cyclic(m)
            }
            _ => Err(bad()),
        }
    }

    pub fn from_doc(doc: &PresentationDoc) -> Result<Self> {
        let m1 = IMatrix::from_rows(&doc.m1)?;
        let m2 = IMatrix::from_rows(&doc.m2)?;
        let phi = QMatrix::parse_rows(&doc.phi)?;
        if m1.dim() != doc.n {
            return Err(Error::DimensionMismatch(format!(
                "n = {} but m1 is {1}x{1}",
                doc.n,
                m1.dim()
            )));
        }
        Self::new(m1, m2, phi)
    }

    pub fn to_doc(&self) -> PresentationDoc {
        PresentationDoc {
            n: self.n,
            m1: self.m1.rows(),
            m2: self.m2.rows(),
            phi: self.phi.rows_as_strings(),
        }
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn m1(&self) -> &IMatrix {
        &self.m1
    }

    pub fn m2(&self) -> &IMatrix {
        &self.m2
    }

    pub fn phi(&self) -> &QMatrix {
        &self.phi
    }

    pub fn phi_inv(&self) -> &QMatrix {
        &self.phi_inv
    }

    /// Cosets of `i1(Z^n)` (edges into a vertex).
    pub fn cosets_i1(&self) -> &CosetTable {
        &self.cosets_1
    }

    /// Cosets of `i2(Z^n)` (edges out of a vertex).
    pub fn cosets_i2(&self) -> &CosetTable {
        &self.cosets_2
    }

    /// `phi^k` for any integer `k`.
    pub fn phi_pow(&self, k: i64) -> QMatrix {
        let base = if k >= 0 { &self.phi } else { &self.phi_inv };
        let mut acc = QMatrix::identity(self.n);
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(base);
        }
        acc
    }

    /// All `2n + 2` generator letters: `x_1^{+-1}, ..., x_n^{+-1}, t^{+-1}`.
    pub fn generators(&self) -> Vec<Letter> {
        let mut g = Vec::with_capacity(2 * self.n + 2);
        for axis in 0..self.n {
            g.push(Letter::X { axis, power: 1 });
            g.push(Letter::X { axis, power: -1 });
        }
        g.push(Letter::T { power: 1 });
        g.push(Letter::T { power: -1 });
        g
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            syllables: Vec::new(),
            tail: vec![0; self.n],
        }
    }

    /// The element `x^v` of the base group.
    pub fn base_element(&self, v: IVec) -> GroupElement {
        assert_eq!(v.len(), self.n);
        GroupElement {
            syllables: Vec::new(),
            tail: v,
        }
    }

    pub fn t(&self) -> GroupElement {
        let mut g = self.identity();
        self.push_t(&mut g, 1);
        g
    }

    /// Right-multiplies `g` by `t^sign` and restores reduced form.
    pub(crate) fn push_t(&self, g: &mut GroupElement, sign: i8) {
        debug_assert!(sign == 1 || sign == -1);
        // t:     tail = rep + m2 u,  (m2 u) t = t (m1 u)
        // t^-1:  tail = rep + m1 u,  (m1 u) t^-1 = t^-1 (m2 u)
        let (table, image) = if sign > 0 {
            (&self.cosets_2, &self.m1)
        } else {
            (&self.cosets_1, &self.m2)
        };
        let (rep, u) = table.decompose(&g.tail);
        let moved = image.mul_vec(&u);
        let pinch = rep.iter().all(|&x| x == 0)
            && g.syllables.last().is_some_and(|s| s.sign == -sign);
        if pinch {
            let last = g.syllables.pop().expect("pinch needs a syllable");
            g.tail = last.rep.iter().zip(&moved).map(|(a, b)| a + b).collect();
        } else {
            g.syllables.push(Syllable { rep, sign });
            g.tail = moved;
        }
    }

    fn push_letter(&self, g: &mut GroupElement, letter: &Letter) -> Result<()> {
        match *letter {
            Letter::X { axis, power } => {
                if axis >= self.n {
                    return Err(Error::UnknownLetter {
                        letter: letter.to_string(),
                        position: 0,
                    });
                }
                g.tail[axis] += power;
            }
            Letter::T { power } => {
                let sign = if power > 0 { 1 } else { -1 };
                for _ in 0..power.unsigned_abs() {
                    self.push_t(g, sign);
                }
            }
        }
        Ok(())
    }

    /// Britton-reduces a word. Pinches are removed as soon as they form,
    /// which is innermost-first rewriting.
    pub fn britton_reduce(&self, word: &[Letter]) -> Result<GroupElement> {
        let mut g = self.identity();
        for (position, letter) in word.iter().enumerate() {
            self.push_letter(&mut g, letter).map_err(|e| match e {
                Error::UnknownLetter { letter, .. } => Error::UnknownLetter { letter, position },
                other => other,
            })?;
        }
        Ok(g)
    }

    /// Right-multiplies by a single letter.
    pub fn mul_letter(&self, g: &GroupElement, letter: &Letter) -> GroupElement {
        let mut out = g.clone();
        self.push_letter(&mut out, letter).expect("letter from this presentation");
        out
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mut g = a.clone();
        for s in &b.syllables {
            add_assign(&mut g.tail, &s.rep);
            self.push_t(&mut g, s.sign);
        }
        add_assign(&mut g.tail, &b.tail);
        g
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        let mut g = self.base_element(a.tail.iter().map(|x| -x).collect());
        for s in a.syllables.iter().rev() {
            self.push_t(&mut g, -s.sign);
            for (x, r) in g.tail.iter_mut().zip(&s.rep) {
                *x -= r;
            }
        }
        g
    }

    /// Image in `R^n x|_phi Z` under `g -> (g, 0)`, `t -> (0, 1)`, exact.
    pub fn j_n(&self, g: &GroupElement) -> NTilde {
        let mut v: QVec = vec![BigRational::zero(); self.n];
        let mut k = 0i64;
        let mut power = QMatrix::identity(self.n);
        for s in &g.syllables {
            add_assign_q(&mut v, &power.mul_ivec(&s.rep));
            k += s.sign as i64;
            power = power.mul(if s.sign > 0 { &self.phi } else { &self.phi_inv });
        }
        add_assign_q(&mut v, &power.mul_ivec(&g.tail));
        NTilde { v, k }
    }

    /// Product in `R^n x|_phi Z`: `(v, k)(v', k') = (v + phi^k v', k + k')`.
    pub fn ntilde_mul(&self, a: &NTilde, b: &NTilde) -> NTilde {
        let mut v = a.v.clone();
        add_assign_q(&mut v, &self.phi_pow(a.k).mul_vec(&b.v));
        NTilde { v, k: a.k + b.k }
    }

    /// Letters of the normal form, in order.
    pub fn letters(&self, g: &GroupElement) -> Vec<Letter> {
        let mut out = Vec::new();
        let push_vec = |out: &mut Vec<Letter>, v: &[i64]| {
            for (axis, &power) in v.iter().enumerate() {
                if power != 0 {
                    out.push(Letter::X { axis, power });
                }
            }
        };
        for s in &g.syllables {
            push_vec(&mut out, &s.rep);
            match out.last_mut() {
                Some(Letter::T { power }) if power.signum() == s.sign as i64 => *power += s.sign as i64,
                _ => out.push(Letter::T { power: s.sign as i64 }),
            }
        }
        push_vec(&mut out, &g.tail);
        out
    }

    pub fn format(&self, g: &GroupElement) -> String {
        format_word(&self.letters(g), self.n)
    }

    fn bs1q(&self) -> Option<i64> {
        (self.n == 1 && self.m1.get(0, 0) == 1).then(|| self.m2.get(0, 0))
    }

    /// Image of a word under the faithful affine representation of `BS(1,q)`:
    /// `x -> (y -> y + 1)`, `t -> (y -> q y)`. Computed letter by letter,
    /// independently of normal forms.
    pub fn affine_of_word(&self, word: &[Letter]) -> Result<Affine> {
        let q = self.bs1q().ok_or(Error::UnsupportedPresentation)?;
        let q = BigRational::from_integer(q.into());
        let mut acc = Affine::identity();
        for letter in word {
            let step = match *letter {
                Letter::X { axis: 0, power } => Affine {
                    scale: BigRational::one(),
                    offset: BigRational::from_integer(power.into()),
                },
                Letter::X { .. } => {
                    return Err(Error::UnknownLetter {
                        letter: letter.to_string(),
                        position: 0,
                    })
                }
                Letter::T { power } => Affine {
                    scale: pow_rational(&q, power),
                    offset: BigRational::zero(),
                },
            };
            acc = acc.compose(&step);
        }
        Ok(acc)
    }

    pub fn affine_oracle(&self, g: &GroupElement) -> Result<Affine> {
        self.affine_of_word(&self.letters(g))
    }

    /// BFS ball of the given radius in the word metric.
    pub fn ball(&self, radius: usize) -> Result<WordBall> {
        self.ball_with_cap(radius, DEFAULT_BALL_CAP)
    }

    pub fn ball_with_cap(&self, radius: usize, cap: usize) -> Result<WordBall> {
        let gens = self.generators();
        let mut elements = vec![self.identity()];
        let mut lengths = vec![0usize];
        let mut index = HashMap::new();
        index.insert(self.identity(), 0usize);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            if lengths[i] == radius {
                continue;
            }
            for gen in &gens {
                let next = self.mul_letter(&elements[i], gen);
                if index.contains_key(&next) {
                    continue;
                }
                if elements.len() >= cap {
                    return Err(Error::BudgetExceeded { cap });
                }
                index.insert(next.clone(), elements.len());
                elements.push(next);
                lengths.push(lengths[i] + 1);
                queue.push_back(elements.len() - 1);
            }
        }
        Ok(WordBall {
            radius,
            elements,
            lengths,
            index,
        })
    }

    /// Word length by BFS from the identity, giving up past `budget`.
    pub fn word_length(&self, g: &GroupElement, budget: usize) -> Result<usize> {
        if g.is_identity() {
            return Ok(0);
        }
        let gens = self.generators();
        let mut seen = HashMap::new();
        seen.insert(self.identity(), 0usize);
        let mut frontier = vec![self.identity()];
        for r in 1..=budget {
            let mut next_frontier = Vec::new();
            for h in &frontier {
                for gen in &gens {
                    let next = self.mul_letter(h, gen);
                    if seen.contains_key(&next) {
                        continue;
                    }
                    if &next == g {
                        return Ok(r);
                    }
                    if seen.len() >= DEFAULT_BALL_CAP {
                        return Err(Error::BudgetExceeded { cap: DEFAULT_BALL_CAP });
                    }
                    seen.insert(next.clone(), r);
                    next_frontier.push(next);
                }
            }
            frontier = next_frontier;
        }
        Err(Error::NotWithinBudget { budget })
    }

    /// Parses words such as `"t x t^-1 x^2"`; for `n > 1` use `x1 .. xn`.
    pub fn parse_word(&self, text: &str) -> Result<Vec<Letter>> {
        parse_word(text, self.n)
    }
}

fn add_assign(a: &mut [i64], b: &[i64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn add_assign_q(a: &mut [BigRational], b: &[BigRational]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn pow_rational(q: &BigRational, k: i64) -> BigRational {
    let base = if k >= 0 { q.clone() } else { q.recip() };
    let mut acc = BigRational::one();
    for _ in 0..k.unsigned_abs() {
        acc *= &base;
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Syllable {
    pub rep: IVec,
    pub sign: i8,
}

/// Britton-reduced normal form `r_1 t^{e_1} ... r_k t^{e_k} tail`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub syllables: Vec<Syllable>,
    pub tail: IVec,
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        self.syllables.is_empty() && self.tail.iter().all(|&x| x == 0)
    }

    /// Exponent sum of `t`: the height homomorphism `p`.
    pub fn t_exponent(&self) -> i64 {
        self.syllables.iter().map(|s| s.sign as i64).sum()
    }

    /// Whether the element lies in the base group `Z^n`.
    pub fn in_base(&self) -> bool {
        self.syllables.is_empty()
    }
}

/// A letter raised to a nonzero power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    X { axis: usize, power: i64 },
    T { power: i64 },
}

impl Letter {
    pub fn inverse(&self) -> Letter {
        match *self {
            Letter::X { axis, power } => Letter::X { axis, power: -power },
            Letter::T { power } => Letter::T { power: -power },
        }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (name, power) = match *self {
            Letter::X { axis, power } => (format!("x{}", axis + 1), power),
            Letter::T { power } => ("t".to_string(), power),
        };
        if power == 1 {
            write!(f, "{name}")
        } else {
            write!(f, "{name}^{power}")
        }
    }
}

/// Renders letters as text; `x` is used instead of `x1` when `n = 1`.
pub fn format_word(letters: &[Letter], n: usize) -> String {
    if letters.is_empty() {
        return "1".to_string();
    }
    letters
        .iter()
        .map(|l| {
            let s = l.to_string();
            if n == 1 {
                s.replacen("x1", "x", 1)
            } else {
                s
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parses a whitespace-separated word over `x` (or `x1..xn`) and `t`, each
/// optionally followed by `^k`. `1` and `e` denote the empty word.
pub fn parse_word(text: &str, n: usize) -> Result<Vec<Letter>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() || c == '*' || c == '.' {
            i += 1;
            continue;
        }
        let start = i;
        let unknown = |pos: usize, s: &str| Error::UnknownLetter {
            letter: s.to_string(),
            position: pos,
        };
        let letter = match c {
            't' => {
                i += 1;
                Some(None)
            }
            'x' => {
                i += 1;
                let num_start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let axis = if num_start == i {
                    if n != 1 {
                        return Err(unknown(start, "x"));
                    }
                    0
                } else {
                    let idx: usize = text[num_start..i].parse().map_err(|_| unknown(start, &text[start..i]))?;
                    if idx == 0 || idx > n {
                        return Err(unknown(start, &text[start..i]));
                    }
                    idx - 1
                };
                Some(Some(axis))
            }
            '1' | 'e' => {
                i += 1;
                None
            }
            _ => {
                let end = text[start..].find(char::is_whitespace).map_or(text.len(), |k| start + k);
                return Err(unknown(start, &text[start..end]));
            }
        };
        let mut power = 1i64;
        if i < bytes.len() && bytes[i] == b'^' {
            i += 1;
            let num_start = i;
            if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
                i += 1;
            }
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            power = text[num_start..i]
                .parse()
                .map_err(|_| unknown(num_start, &text[start..i]))?;
        }
        match letter {
            Some(_) if power == 0 => {}
            Some(None) => out.push(Letter::T { power }),
            Some(Some(axis)) => out.push(Letter::X { axis, power }),
            None => {}
        }
    }
    Ok(out)
}

/// Element of `R^n x|_phi Z`, exact.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NTilde {
    pub v: QVec,
    pub k: i64,
}

impl NTilde {
    pub fn v_f64(&self) -> Vec<f64> {
        self.v.iter().map(rational_to_f64).collect()
    }
}

/// Affine map `y -> scale * y + offset` over `Q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Affine {
    pub scale: BigRational,
    pub offset: BigRational,
}

impl Affine {
    pub fn identity() -> Self {
        Self {
            scale: BigRational::one(),
            offset: BigRational::zero(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Affine) -> Affine {
        Affine {
            scale: &self.scale * &other.scale,
            offset: &self.scale * &other.offset + &self.offset,
        }
    }

    pub fn from_ints(scale: i64, offset: i64) -> Self {
        Self {
            scale: BigRational::from_integer(BigInt::from(scale)),
            offset: BigRational::from_integer(BigInt::from(offset)),
        }
    }
}

/// All normal forms of word length at most `radius`, with exact lengths.
#[derive(Clone, Debug)]
pub struct WordBall {
    pub radius: usize,
    pub elements: Vec<GroupElement>,
    pub lengths: Vec<usize>,
    index: HashMap<GroupElement, usize>,
}

impl WordBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn length_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).map(|&i| self.lengths[i])
    }

    pub fn sphere(&self, r: usize) -> impl Iterator<Item = &GroupElement> {
        self.elements
            .iter()
            .zip(&self.lengths)
            .filter(move |(_, &l)| l == r)
            .map(|(g, _)| g)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, usize)> {
        self.elements.iter().zip(self.lengths.iter().copied())
    }

    /// Ball sizes for radii `0..=radius`.
    pub fn growth(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.radius + 1];
        for &l in &self.lengths {
            counts[l] += 1;
        }
        let mut acc = 0;
        counts
            .into_iter()
            .map(|c| {
                acc += c;
                acc
            })
            .collect()
    }
}

pub type SharedPresentation = Arc<Presentation>;
