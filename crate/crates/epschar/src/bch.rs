//! Universal graded Campbell-Baker-Hausdorff polynomials in a truncated free
//! associative algebra over exact rationals.
//!
//! Symbols X_i, Y_i, X'_i carry weight i. The z-family solves
//! (e^X1 e^X2 ...)(e^Y1 e^Y2 ...) = e^z1 e^z2 ..., the u-family solves the
//! conjugation variant with three factor strings. Extracted components are
//! certified Lie elements (Friedrichs criterion) and rewritten in the Lyndon
//! basis, which gives a canonical form for comparisons.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::fp::FieldCtx;
use crate::linalg::FpMat;
use crate::Error;

pub type Q = Ratio<i64>;

pub const MAX_R: u64 = 6;

/// Symbol kinds, ordered X' < Y < X (any fixed order works for the Lyndon
/// basis; this one matches the argument order of the conjugation family).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymKind {
    XPrime,
    Y,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sym {
    pub kind: SymKind,
    pub idx: u8,
}

impl Sym {
    pub fn new(kind: SymKind, idx: u8) -> Sym {
        assert!(idx >= 1);
        Sym { kind, idx }
    }

    pub fn weight(&self) -> usize {
        self.idx as usize
    }

    pub fn name(&self) -> String {
        match self.kind {
            SymKind::X => format!("X{}", self.idx),
            SymKind::Y => format!("Y{}", self.idx),
            SymKind::XPrime => format!("X'{}", self.idx),
        }
    }
}

pub type Word = Vec<Sym>;

fn word_weight(w: &Word) -> usize {
    w.iter().map(|s| s.weight()).sum()
}

/// Truncated free associative algebra element: rational combination of words
/// of total weight <= w_max.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    pub w_max: usize,
    pub terms: BTreeMap<Word, Q>,
}

impl Series {
    pub fn zero(w_max: usize) -> Series {
        Series { w_max, terms: BTreeMap::new() }
    }

    pub fn one(w_max: usize) -> Series {
        let mut s = Series::zero(w_max);
        s.terms.insert(Vec::new(), Q::one());
        s
    }

    pub fn sym(w_max: usize, sym: Sym) -> Series {
        let mut s = Series::zero(w_max);
        if sym.weight() <= w_max {
            s.terms.insert(vec![sym], Q::one());
        }
        s
    }

    pub fn add_term(&mut self, w: Word, c: Q) {
        if c.is_zero() || word_weight(&w) > self.w_max {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(w) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add(&self, o: &Series) -> Series {
        let mut out = self.clone();
        for (w, c) in &o.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }

    pub fn scale(&self, c: Q) -> Series {
        let mut out = Series::zero(self.w_max);
        if c.is_zero() {
            return out;
        }
        for (w, v) in &self.terms {
            out.terms.insert(w.clone(), *v * c);
        }
        out
    }

    pub fn mul(&self, o: &Series) -> Series {
        let mut out = Series::zero(self.w_max);
        for (w1, c1) in &self.terms {
            let wt1 = word_weight(w1);
            for (w2, c2) in &o.terms {
                if wt1 + word_weight(w2) <= self.w_max {
                    let mut w = w1.clone();
                    w.extend_from_slice(w2);
                    out.add_term(w, *c1 * *c2);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> Q {
        self.terms.get(&Vec::new()).copied().unwrap_or_else(Q::zero)
    }

    /// Homogeneous part of the given total weight.
    pub fn weight_part(&self, w: usize) -> Series {
        let mut out = Series::zero(self.w_max);
        for (word, c) in &self.terms {
            if word_weight(word) == w {
                out.terms.insert(word.clone(), *c);
            }
        }
        out
    }

    /// exp of a series with zero constant term.
    pub fn exp(&self) -> Series {
        assert!(self.constant_term().is_zero());
        let mut out = Series::one(self.w_max);
        let mut pow = Series::one(self.w_max);
        let mut fact = Q::one();
        for k in 1..=self.w_max {
            pow = pow.mul(self);
            fact *= Q::from_integer(k as i64);
            out = out.add(&pow.scale(fact.recip()));
            if pow.is_zero() {
                break;
            }
        }
        out
    }

    /// log of a series with constant term 1.
    pub fn log(&self) -> Series {
        assert!(self.constant_term().is_one());
        let mut u = self.clone();
        u.add_term(Vec::new(), -Q::one());
        let mut out = Series::zero(self.w_max);
        let mut pow = Series::one(self.w_max);
        for k in 1..=self.w_max {
            pow = pow.mul(&u);
            let sign = if k % 2 == 1 { Q::one() } else { -Q::one() };
            out = out.add(&pow.scale(sign / Q::from_integer(k as i64)));
            if pow.is_zero() {
                break;
            }
        }
        out
    }
}

/// Binary bracket expression over symbols.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum BracketTree {
    Leaf(Sym),
    Br(Box<BracketTree>, Box<BracketTree>),
}

pub fn leaf(kind: SymKind, idx: u8) -> BracketTree {
    BracketTree::Leaf(Sym::new(kind, idx))
}

pub fn br(a: BracketTree, b: BracketTree) -> BracketTree {
    BracketTree::Br(Box::new(a), Box::new(b))
}

impl BracketTree {
    pub fn expand(&self, w_max: usize) -> Series {
        match self {
            BracketTree::Leaf(s) => Series::sym(w_max, *s),
            BracketTree::Br(a, b) => {
                let ea = a.expand(w_max);
                let eb = b.expand(w_max);
                ea.mul(&eb).add(&eb.mul(&ea).scale(-Q::one()))
            }
        }
    }

    pub fn weight(&self) -> usize {
        match self {
            BracketTree::Leaf(s) => s.weight(),
            BracketTree::Br(a, b) => a.weight() + b.weight(),
        }
    }

    pub fn render(&self) -> String {
        match self {
            BracketTree::Leaf(s) => s.name(),
            BracketTree::Br(a, b) => format!("[{},{}]", a.render(), b.render()),
        }
    }

    pub fn eval(&self, assign: &dyn Fn(Sym) -> FpMat) -> FpMat {
        match self {
            BracketTree::Leaf(s) => assign(*s),
            BracketTree::Br(a, b) => a.eval(assign).bracket(&b.eval(assign)),
        }
    }
}

/// Rational combination of bracket words, homogeneous of one weight, stored
/// in Lyndon canonical form (terms sorted by the underlying Lyndon word).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniversalLiePoly {
    pub weight: usize,
    pub terms: Vec<(Q, BracketTree)>,
}

impl UniversalLiePoly {
    pub fn expand(&self, w_max: usize) -> Series {
        let mut out = Series::zero(w_max);
        for (c, t) in &self.terms {
            out = out.add(&t.expand(w_max).scale(*c));
        }
        out
    }

    pub fn eval(&self, f: &FieldCtx, assign: &dyn Fn(Sym) -> FpMat) -> FpMat {
        let n = assign(Sym::new(SymKind::X, 1)).dim();
        let mut acc = FpMat::zero(n, f.p);
        for (c, t) in &self.terms {
            let m = t.eval(assign);
            let num = f.reduce_i64(*c.numer());
            let den = f.reduce_i64(*c.denom());
            assert!(den != 0, "denominator divisible by p; need p >= r");
            acc = acc.add(&m.scale(f.mul(num, f.inv(den))));
        }
        acc
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (c, t)) in self.terms.iter().enumerate() {
            if i > 0 {
                out.push_str(" + ");
            }
            let _ = write!(out, "({})*{}", c, t.render());
        }
        out
    }

    /// Largest symbol index occurring.
    pub fn max_index(&self) -> u8 {
        fn walk(t: &BracketTree) -> u8 {
            match t {
                BracketTree::Leaf(s) => s.idx,
                BracketTree::Br(a, b) => walk(a).max(walk(b)),
            }
        }
        self.terms.iter().map(|(_, t)| walk(t)).max().unwrap_or(0)
    }
}

/// Universal polynomial with coefficients already reduced mod p, so hot
/// loops skip the rational bookkeeping.
#[derive(Debug, Clone)]
pub struct CompiledLiePoly {
    pub weight: usize,
    pub terms: Vec<(u64, BracketTree)>,
}

impl UniversalLiePoly {
    pub fn compile(&self, f: &FieldCtx) -> CompiledLiePoly {
        let terms = self
            .terms
            .iter()
            .map(|(c, t)| {
                let num = f.reduce_i64(*c.numer());
                let den = f.reduce_i64(*c.denom());
                assert!(den != 0, "denominator divisible by p; need p >= r");
                (f.mul(num, f.inv(den)), t.clone())
            })
            .collect();
        CompiledLiePoly { weight: self.weight, terms }
    }
}

impl CompiledLiePoly {
    pub fn eval(&self, n: usize, f: &FieldCtx, assign: &dyn Fn(Sym) -> FpMat) -> FpMat {
        let mut acc = FpMat::zero(n, f.p);
        for (c, t) in &self.terms {
            acc = acc.add(&t.eval(assign).scale(*c));
        }
        acc
    }
}

/// Lyndon word test: strictly smaller than all proper rotations.
fn is_lyndon(w: &[Sym]) -> bool {
    if w.is_empty() {
        return false;
    }
    for k in 1..w.len() {
        let rot: Vec<Sym> = w[k..].iter().chain(&w[..k]).copied().collect();
        if rot.as_slice() <= w {
            return false;
        }
    }
    true
}

/// Standard (Chen-Fox-Lyndon) bracketing of a Lyndon word: split at the
/// longest proper Lyndon suffix.
fn lyndon_bracketing(w: &[Sym]) -> BracketTree {
    if w.len() == 1 {
        return BracketTree::Leaf(w[0]);
    }
    let split = (1..w.len())
        .find(|&k| is_lyndon(&w[k..]))
        .expect("every Lyndon word of length >= 2 has a proper Lyndon suffix");
    br(lyndon_bracketing(&w[..split]), lyndon_bracketing(&w[split..]))
}

/// Rewrite a homogeneous Lie element (given by its associative expansion)
/// in the Lyndon basis. Errors if the element is not Lie.
pub fn to_lyndon_basis(s: &Series, weight: usize) -> Result<UniversalLiePoly, Error> {
    let mut rest = s.clone();
    let mut terms: Vec<(Q, BracketTree)> = Vec::new();
    while !rest.is_zero() {
        // The lexicographically smallest word within its letter-multiset
        // class is a Lyndon word with the basis coefficient; strip it.
        let w = {
            let (first, _) = rest.terms.iter().next().unwrap();
            let mut sorted_class: Vec<&Word> = rest
                .terms
                .keys()
                .filter(|k| {
                    let mut a = (*k).clone();
                    let mut b = first.clone();
                    a.sort();
                    b.sort();
                    a == b
                })
                .collect();
            sorted_class.sort();
            sorted_class[0].clone()
        };
        if !is_lyndon(&w) {
            return Err(Error::NotLie(format!(
                "minimal word {:?} is not Lyndon; element is not a Lie polynomial",
                w.iter().map(|s| s.name()).collect::<Vec<_>>()
            )));
        }
        let c = rest.terms[&w];
        let tree = lyndon_bracketing(&w);
        rest = rest.add(&tree.expand(weight).scale(-c));
        terms.push((c, tree));
    }
    terms.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(UniversalLiePoly { weight, terms })
}

/// Friedrichs criterion: s is primitive for the coproduct that sends each
/// symbol g to g(x)1 + 1(x)g.
pub fn is_lie(s: &Series) -> bool {
    if !s.constant_term().is_zero() {
        return false;
    }
    let mut delta: BTreeMap<(Word, Word), Q> = BTreeMap::new();
    for (w, c) in &s.terms {
        let m = w.len();
        for mask in 0u32..(1 << m) {
            let mut left = Vec::new();
            let mut right = Vec::new();
            for (i, &sym) in w.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    left.push(sym);
                } else {
                    right.push(sym);
                }
            }
            let e = delta.entry((left, right)).or_insert_with(Q::zero);
            *e += *c;
        }
    }
    // expected: s(x)1 + 1(x)s
    let mut expected: BTreeMap<(Word, Word), Q> = BTreeMap::new();
    for (w, c) in &s.terms {
        *expected.entry((w.clone(), Vec::new())).or_insert_with(Q::zero) += *c;
        *expected.entry((Vec::new(), w.clone())).or_insert_with(Q::zero) += *c;
    }
    delta.retain(|_, v| !v.is_zero());
    expected.retain(|_, v| !v.is_zero());
    delta == expected
}

/// The z, u, u' tables for one truncation level r (weights 1..r-1).
#[derive(Debug, Clone)]
pub struct BchTables {
    pub r: u64,
    pub z: Vec<UniversalLiePoly>,
    pub u: Vec<UniversalLiePoly>,
    pub u_prime: Vec<UniversalLiePoly>,
}

fn exp_string(w_max: usize, kind: SymKind, negate: bool, reverse: bool) -> Series {
    // product of exp(sym_i) for i = 1..w_max, optionally negated / reversed
    let mut factors: Vec<Series> = (1..=w_max as u8)
        .map(|i| {
            let s = Series::sym(w_max, Sym::new(kind, i));
            let s = if negate { s.scale(-Q::one()) } else { s };
            s.exp()
        })
        .collect();
    if reverse {
        factors.reverse();
    }
    factors.into_iter().fold(Series::one(w_max), |acc, f| acc.mul(&f))
}

/// Peel the graded components of `prod` as the factorization
/// e^{s_1} e^{s_2} ... with s_i homogeneous of weight i.
fn peel(mut prod: Series, w_max: usize) -> Result<Vec<UniversalLiePoly>, Error> {
    let mut out = Vec::new();
    for i in 1..=w_max {
        let assoc = prod.log().weight_part(i);
        if !is_lie(&assoc) {
            return Err(Error::NotLie(format!("weight-{i} component fails the primitivity test")));
        }
        let lie = to_lyndon_basis(&assoc, i)?;
        prod = assoc.scale(-Q::one()).exp().mul(&prod);
        out.push(lie);
    }
    if !prod.add(&Series::one(w_max).scale(-Q::one())).is_zero() {
        return Err(Error::NotLie("residual after peeling all graded components".into()));
    }
    Ok(out)
}

fn check_r(r: u64) -> Result<usize, Error> {
    if !(2..=MAX_R).contains(&r) {
        return Err(Error::Config(format!("truncation level r = {r} outside supported range 2..={MAX_R}")));
    }
    Ok((r - 1) as usize)
}

/// z_1 .. z_(r-1) governing products of exponential strings.
pub fn bch_z(r: u64) -> Result<Vec<UniversalLiePoly>, Error> {
    let w = check_r(r)?;
    let prod = exp_string(w, SymKind::X, false, false).mul(&exp_string(w, SymKind::Y, false, false));
    peel(prod, w)
}

/// u_1 .. u_(r-1) and u'_1 .. u'_(r-1) governing conjugation.
pub fn bch_u(r: u64) -> Result<(Vec<UniversalLiePoly>, Vec<UniversalLiePoly>), Error> {
    let w = check_r(r)?;
    let prod = exp_string(w, SymKind::XPrime, false, false)
        .mul(&exp_string(w, SymKind::Y, false, false))
        .mul(&exp_string(w, SymKind::X, true, true));
    let u = peel(prod, w)?;
    let mut u_prime = Vec::new();
    for (i, ui) in u.iter().enumerate() {
        let idx = (i + 1) as u8;
        // u'_i = u_i - (X'_i - X_i + Y_i)
        let mut s = ui.expand(w);
        s.add_term(vec![Sym::new(SymKind::XPrime, idx)], -Q::one());
        s.add_term(vec![Sym::new(SymKind::X, idx)], Q::one());
        s.add_term(vec![Sym::new(SymKind::Y, idx)], -Q::one());
        let up = to_lyndon_basis(&s, i + 1)?;
        if up.max_index() >= idx && !up.terms.is_empty() {
            return Err(Error::NotLie(format!(
                "u'_{idx} involves symbols of index >= {idx}, contradicting the grading"
            )));
        }
        u_prime.push(up);
    }
    Ok((u, u_prime))
}

impl BchTables {
    pub fn new(r: u64) -> Result<BchTables, Error> {
        let z = bch_z(r)?;
        let (u, u_prime) = bch_u(r)?;
        Ok(BchTables { r, z, u, u_prime })
    }

    /// JSON dump: lists of (coefficient, bracket word) pairs per component.
    pub fn to_json(&self) -> serde_json::Value {
        fn poly_json(p: &UniversalLiePoly) -> serde_json::Value {
            serde_json::Value::Array(
                p.terms
                    .iter()
                    .map(|(c, t)| {
                        serde_json::json!({
                            "coefficient": c.to_string(),
                            "word": t.render(),
                        })
                    })
                    .collect(),
            )
        }
        serde_json::json!({
            "r": self.r,
            "z": self.z.iter().map(poly_json).collect::<Vec<_>>(),
            "u": self.u.iter().map(poly_json).collect::<Vec<_>>(),
            "u_prime": self.u_prime.iter().map(poly_json).collect::<Vec<_>>(),
        })
    }
}

/// The displayed low-weight tables, used as golden references in tests and
/// reports: z_1..z_3, u_1..u_3.
pub mod golden {
    use super::*;
    use SymKind::{X, XPrime, Y};

    fn q(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    pub fn z1() -> Vec<(Q, BracketTree)> {
        vec![(q(1, 1), leaf(X, 1)), (q(1, 1), leaf(Y, 1))]
    }

    pub fn z2() -> Vec<(Q, BracketTree)> {
        vec![
            (q(1, 1), leaf(X, 2)),
            (q(1, 1), leaf(Y, 2)),
            (q(1, 2), br(leaf(X, 1), leaf(Y, 1))),
        ]
    }

    pub fn z3() -> Vec<(Q, BracketTree)> {
        vec![
            (q(1, 1), leaf(X, 3)),
            (q(1, 1), leaf(Y, 3)),
            (q(1, 1), br(leaf(X, 2), leaf(Y, 1))),
            (q(-1, 6), br(leaf(X, 1), br(leaf(X, 1), leaf(Y, 1)))),
            (q(-1, 3), br(leaf(Y, 1), br(leaf(X, 1), leaf(Y, 1)))),
        ]
    }

    pub fn u1() -> Vec<(Q, BracketTree)> {
        vec![(q(1, 1), leaf(XPrime, 1)), (q(-1, 1), leaf(X, 1)), (q(1, 1), leaf(Y, 1))]
    }

    pub fn u2() -> Vec<(Q, BracketTree)> {
        vec![
            (q(1, 1), leaf(XPrime, 2)),
            (q(-1, 1), leaf(X, 2)),
            (q(1, 1), leaf(Y, 2)),
            (q(1, 2), br(leaf(XPrime, 1), leaf(Y, 1))),
            (q(-1, 2), br(leaf(XPrime, 1), leaf(X, 1))),
            (q(-1, 2), br(leaf(Y, 1), leaf(X, 1))),
        ]
    }

    pub fn u3() -> Vec<(Q, BracketTree)> {
        let xp = |i| leaf(XPrime, i);
        let x = |i| leaf(X, i);
        let y = |i| leaf(Y, i);
        vec![
            (q(1, 1), xp(3)),
            (q(-1, 1), x(3)),
            (q(1, 1), y(3)),
            (q(1, 1), br(xp(2), y(1))),
            (q(1, 1), br(x(2), x(1))),
            (q(-1, 1), br(xp(2), x(1))),
            (q(-1, 1), br(y(2), x(1))),
            (q(-1, 6), br(xp(1), br(xp(1), y(1)))),
            (q(-1, 3), br(y(1), br(xp(1), y(1)))),
            (q(1, 2), br(x(1), br(xp(1), y(1)))),
            (q(1, 6), br(xp(1), br(xp(1), x(1)))),
            (q(1, 6), br(xp(1), br(y(1), x(1)))),
            (q(1, 6), br(y(1), br(xp(1), x(1)))),
            (q(1, 6), br(y(1), br(y(1), x(1)))),
            (q(-1, 3), br(x(1), br(xp(1), x(1)))),
            (q(-1, 3), br(x(1), br(y(1), x(1)))),
        ]
    }

    /// Canonicalize an arbitrary bracket combination for comparison.
    pub fn canonical(weight: usize, terms: Vec<(Q, BracketTree)>) -> UniversalLiePoly {
        let mut s = Series::zero(weight);
        for (c, t) in &terms {
            s = s.add(&t.expand(weight).scale(*c));
        }
        to_lyndon_basis(&s, weight).expect("golden display is a Lie element")
    }
}

/// Check whether the denominators of every coefficient divide `bound`.
pub fn denominators_divide(polys: &[UniversalLiePoly], bound: i64) -> bool {
    polys.iter().all(|p| p.terms.iter().all(|(c, _)| bound % c.denom().abs() == 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_log_inverse() {
        let w = 4;
        let s = Series::sym(w, Sym::new(SymKind::X, 1))
            .add(&Series::sym(w, Sym::new(SymKind::Y, 2)).scale(Q::new(1, 3)));
        let back = s.exp().log();
        assert_eq!(back, s);
    }

    #[test]
    fn golden_z_tables() {
        let z = bch_z(4).unwrap();
        assert_eq!(z[0], golden::canonical(1, golden::z1()));
        assert_eq!(z[1], golden::canonical(2, golden::z2()));
        assert_eq!(z[2], golden::canonical(3, golden::z3()));
    }

    #[test]
    fn golden_u_tables() {
        let (u, u_prime) = bch_u(4).unwrap();
        assert_eq!(u[0], golden::canonical(1, golden::u1()));
        assert_eq!(u[1], golden::canonical(2, golden::u2()));
        assert_eq!(u[2], golden::canonical(3, golden::u3()));
        // u'_1 = 0 and u'_i involves only lower indices
        assert!(u_prime[0].terms.is_empty());
        assert!(u_prime[1].max_index() <= 1);
        assert!(u_prime[2].max_index() <= 2);
    }

    #[test]
    fn reconstruction_full_range() {
        for r in 2..=MAX_R {
            let w = (r - 1) as usize;
            let z = bch_z(r).unwrap();
            let lhs = exp_string(w, SymKind::X, false, false).mul(&exp_string(w, SymKind::Y, false, false));
            let mut rhs = Series::one(w);
            for zi in &z {
                rhs = rhs.mul(&zi.expand(w).exp());
            }
            assert_eq!(lhs, rhs, "reconstruction fails at r = {r}");
        }
    }

    #[test]
    fn u_reconstruction_full_range() {
        for r in 2..=MAX_R {
            let w = (r - 1) as usize;
            let (u, _) = bch_u(r).unwrap();
            let lhs = exp_string(w, SymKind::XPrime, false, false)
                .mul(&exp_string(w, SymKind::Y, false, false))
                .mul(&exp_string(w, SymKind::X, true, true));
            let mut rhs = Series::one(w);
            for ui in &u {
                rhs = rhs.mul(&ui.expand(w).exp());
            }
            assert_eq!(lhs, rhs, "conjugation reconstruction fails at r = {r}");
        }
    }

    #[test]
    fn specialization_identities() {
        // all Y = 0 reduces z_i to X_i, all X = 0 to Y_i
        let z = bch_z(5).unwrap();
        for (i, zi) in z.iter().enumerate() {
            let w = i + 1;
            let mut kill_y = zi.expand(w);
            kill_y.terms.retain(|word, _| word.iter().all(|s| s.kind != SymKind::Y));
            assert_eq!(kill_y, Series::sym(w, Sym::new(SymKind::X, w as u8)));
            let mut kill_x = zi.expand(w);
            kill_x.terms.retain(|word, _| word.iter().all(|s| s.kind != SymKind::X));
            assert_eq!(kill_x, Series::sym(w, Sym::new(SymKind::Y, w as u8)));
        }
    }

    #[test]
    fn friedrichs_rejects_products() {
        let w = 2;
        let x1 = Series::sym(w, Sym::new(SymKind::X, 1));
        let y1 = Series::sym(w, Sym::new(SymKind::Y, 1));
        assert!(is_lie(&x1));
        assert!(!is_lie(&x1.mul(&y1)));
        let commutator = x1.mul(&y1).add(&y1.mul(&x1).scale(-Q::one()));
        assert!(is_lie(&commutator));
    }

    #[test]
    fn all_components_certified_lie() {
        for r in 2..=5 {
            let w = (r - 1) as usize;
            for zi in bch_z(r).unwrap() {
                assert!(is_lie(&zi.expand(w)));
            }
            let (u, _) = bch_u(r).unwrap();
            for ui in u {
                assert!(is_lie(&ui.expand(w)));
            }
        }
    }

    #[test]
    fn small_denominators() {
        let z = bch_z(4).unwrap();
        let (u, up) = bch_u(4).unwrap();
        assert!(denominators_divide(&z, 6));
        assert!(denominators_divide(&u, 6));
        assert!(denominators_divide(&up, 6));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(bch_z(1).is_err());
        assert!(bch_z(7).is_err());
    }

    #[test]
    fn eval_simple_cases() {
        let f = FieldCtx::new(5).unwrap();
        let z = bch_z(3).unwrap();
        let a = FpMat::from_rows(5, &[&[1, 2], &[3, 4]]);
        let b = FpMat::from_rows(5, &[&[0, 1], &[1, 0]]);
        let zero = FpMat::zero(2, 5);
        // z_1(A, B) = A + B
        let assign = |s: Sym| match (s.kind, s.idx) {
            (SymKind::X, 1) => a,
            (SymKind::Y, 1) => b,
            _ => zero,
        };
        assert_eq!(z[0].eval(&f, &assign), a.add(&b));
        // z_2 with commuting arguments keeps only the linear parts (zero here)
        let assign2 = |s: Sym| match (s.kind, s.idx) {
            (SymKind::X, 1) => a,
            (SymKind::Y, 1) => a, // same matrix commutes with itself
            _ => zero,
        };
        assert_eq!(z[1].eval(&f, &assign2), zero);
    }
}
