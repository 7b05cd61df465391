//! Exact class-function computations: the generic torus character and its
//! Borel lift, the induced character, the exponential-sum counterpart built
//! from the conjugation polynomials, the interpolating ladder between them,
//! inner products, and the vanishing sums for the ladder pieces.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::chars::Scalars;
use crate::cyc::CycValue;
use crate::fp::SplitMix64;
use crate::grgroup::{Factored, GroupCtx, KrMat, Subgroup};
use crate::liealg::RootDatum;
use crate::linalg::FpMat;
use crate::Error;

/// Cost guard for the full-table double loop |G_r| * |B_r|.
pub const TABLE_BUDGET: u128 = 1 << 28;

/// The generic datum: diagonal elements A_1..A_(r-1) and the exponent vector
/// of the order-prime-to-p torus character.
#[derive(Debug, Clone)]
pub struct Datum {
    pub a: Vec<FpMat>,
    pub lambda0: Vec<i64>,
}

impl Datum {
    pub fn validate(&self, n: usize, p: u64, r: usize) -> Result<(), Error> {
        if self.a.len() != r - 1 {
            return Err(Error::Config(format!(
                "expected {} diagonal elements, got {}",
                r - 1,
                self.a.len()
            )));
        }
        if self.lambda0.len() != n {
            return Err(Error::Config(format!(
                "character exponent vector must have length {n}"
            )));
        }
        for (j, m) in self.a.iter().enumerate() {
            if m.dim() != n || m.p != p || !m.is_diagonal() {
                return Err(Error::Config(format!("A_{} is not a diagonal n x n matrix mod p", j + 1)));
            }
        }
        if r >= 2 {
            let last = &self.a[r - 2];
            let d = last.diagonal();
            for i in 0..n {
                for j in (i + 1)..n {
                    if d[i] == d[j] {
                        return Err(Error::Config(format!(
                            "A_{} not regular: entries {},{} collide",
                            r - 1,
                            d[i],
                            d[j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Bundle of everything the character computations need.
pub struct CharCtx {
    pub g: GroupCtx,
    pub s: Scalars,
    pub rd: RootDatum,
    pub datum: Datum,
    torus_reps: OnceLock<Vec<FpMat>>,
    borel_reps: OnceLock<Vec<u64>>,
}

/// Class function table keyed by canonical element index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassFunction {
    pub full_domain: bool,
    pub table: BTreeMap<u64, CycValue>,
}

impl CharCtx {
    pub fn new(n: usize, p: u64, r: usize, datum: Datum) -> Result<CharCtx, Error> {
        datum.validate(n, p, r)?;
        Self::new_unchecked(n, p, r, datum)
    }

    /// Constructor without the regularity validation, for degenerate
    /// baseline data used in negative controls.
    pub fn new_unchecked(n: usize, p: u64, r: usize, datum: Datum) -> Result<CharCtx, Error> {
        let g = GroupCtx::new(n, p, r)?;
        let s = Scalars::new(p)?;
        let rd = RootDatum::new(n, p);
        Ok(CharCtx {
            g,
            s,
            rd,
            datum,
            torus_reps: OnceLock::new(),
            borel_reps: OnceLock::new(),
        })
    }

    pub fn torus_reps(&self) -> &[FpMat] {
        self.torus_reps.get_or_init(|| self.g.torus_coset_reps())
    }

    pub fn borel_reps(&self, force: bool) -> Result<&[u64], Error> {
        if let Some(v) = self.borel_reps.get() {
            return Ok(v);
        }
        let reps = self.g.borel_coset_reps(force)?;
        Ok(self.borel_reps.get_or_init(|| reps))
    }

    /// Root-of-unity index of the torus character at an element of T_r,
    /// evaluated through factored coordinates.
    pub fn lambda_torus_index(&self, t: &KrMat) -> Result<u64, Error> {
        if !t.in_torus() {
            return Err(Error::NotInSubgroup("character evaluated outside T_r".into()));
        }
        let fac = self.g.to_factored(t)?;
        let mut idx = self.s.lambda0_index(&self.datum.lambda0, &fac.x.diagonal());
        for (j, tau) in fac.xs.iter().enumerate() {
            let pairing = self.datum.a[j].pair(tau);
            idx = (idx + self.s.psi_index(pairing)) % self.s.cyc.n_root;
        }
        Ok(idx)
    }

    /// Root index of the Borel lift (trivial on the unipotent part).
    pub fn lambda_tilde_index(&self, b: &KrMat) -> Result<u64, Error> {
        let d = self.g.d_r(b)?;
        self.lambda_torus_index(&d)
    }

    pub fn lambda_tilde(&self, b: &KrMat) -> Result<CycValue, Error> {
        Ok(self.s.cyc.root(self.lambda_tilde_index(b)?))
    }

    /// Full induced-character table by the (g, b) double loop: accumulate
    /// the lift of b at index(g^-1 b g), then divide by |B_r|.
    pub fn induced_t_l_full(&self, force: bool) -> Result<ClassFunction, Error> {
        let cost = self.g.card(Subgroup::Gr) * self.g.card(Subgroup::Br);
        if cost > TABLE_BUDGET && !force {
            return Err(Error::Budget { required: cost, limit: TABLE_BUDGET });
        }
        let group = self.g.enumerate(Subgroup::Gr, force)?;
        let borel = self.g.enumerate(Subgroup::Br, force)?;
        let borel_data: Vec<(KrMat, u64)> = borel
            .iter()
            .map(|&idx| {
                let b = KrMat::from_index(self.g.n, self.g.r, self.g.p, idx);
                let l = self.lambda_tilde_index(&b).expect("enumerated Borel element");
                (b, l)
            })
            .collect();
        let space = self.g.index_space() as usize;
        let acc = group
            .par_chunks(256.max(group.len() / 64))
            .map(|chunk| {
                let mut local = vec![self.s.cyc.zero(); space];
                for &gidx in chunk {
                    let g = KrMat::from_index(self.g.n, self.g.r, self.g.p, gidx);
                    let g_inv = g.inv(&self.g.f).expect("group element");
                    for (b, l) in &borel_data {
                        let conj = g_inv.mul(b).mul(&g);
                        self.s.cyc.add_root_assign(&mut local[conj.index() as usize], *l, 1);
                    }
                }
                local
            })
            .reduce(
                || vec![self.s.cyc.zero(); space],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(&b) {
                        self.s.cyc.add_assign(x, y);
                    }
                    a
                },
            );
        let card_b = i64::try_from(self.g.card(Subgroup::Br)).expect("Borel cardinality fits");
        let mut table = BTreeMap::new();
        for &gidx in &group {
            let v = self
                .s
                .cyc
                .div_exact_int(&acc[gidx as usize], card_b)
                .ok_or_else(|| Error::DomainMismatch("induced table not divisible by |B_r|".into()))?;
            table.insert(gidx, v);
        }
        Ok(ClassFunction { full_domain: true, table })
    }

    /// Induced character at one element, summing the lift over the Borel
    /// coset representatives that conjugate it into B_r.
    pub fn t_l_at(&self, g_prime: &KrMat, force: bool) -> Result<CycValue, Error> {
        let reps: Vec<u64> = self.borel_reps(force)?.to_vec();
        let mut acc = self.s.cyc.zero();
        for ridx in reps {
            let g = KrMat::from_index(self.g.n, self.g.r, self.g.p, ridx);
            let conj = g.mul(g_prime).mul(&g.inv(&self.g.f)?);
            if conj.in_borel() {
                let l = self.lambda_tilde_index(&conj)?;
                self.s.cyc.add_root_assign(&mut acc, l, 1);
            }
        }
        Ok(acc)
    }

    /// Exact character pairing (1/|G_r|) sum f conj(g) over the full group.
    pub fn inner_product(&self, f: &ClassFunction, g: &ClassFunction) -> Result<CycValue, Error> {
        if !f.full_domain || !g.full_domain || f.table.len() != g.table.len() {
            return Err(Error::DomainMismatch(
                "inner product needs two matching full-domain tables".into(),
            ));
        }
        let mut acc = self.s.cyc.zero();
        for (idx, fv) in &f.table {
            let gv = g
                .table
                .get(idx)
                .ok_or_else(|| Error::DomainMismatch(format!("index {idx} missing")))?;
            self.s.cyc.add_assign(&mut acc, &self.s.cyc.mul(fv, &self.s.cyc.conj(gv)));
        }
        let card = i64::try_from(self.g.card(Subgroup::Gr)).expect("group cardinality fits");
        self.s
            .cyc
            .div_exact_int(&acc, card)
            .ok_or_else(|| Error::DomainMismatch("pairing sum not divisible by |G_r|".into()))
    }

    /// Evaluates the conjugation polynomials u_1..u_(r-1) at
    /// (X' -> Ad(y^-1) X_k, Y -> Y_k, X -> X_k).
    pub fn eval_us(&self, y: &FpMat, y_inv: &FpMat, xs: &[FpMat], ys: &[FpMat]) -> Vec<FpMat> {
        use crate::bch::{Sym, SymKind};
        let n = self.g.n;
        let p = self.g.p;
        let xs_conj: Vec<FpMat> = xs.iter().map(|m| m.conj_by(y_inv, y)).collect();
        let assign = |s: Sym| -> FpMat {
            let k = (s.idx - 1) as usize;
            match s.kind {
                SymKind::XPrime => xs_conj.get(k).copied().unwrap_or_else(|| FpMat::zero(n, p)),
                SymKind::Y => ys.get(k).copied().unwrap_or_else(|| FpMat::zero(n, p)),
                SymKind::X => xs.get(k).copied().unwrap_or_else(|| FpMat::zero(n, p)),
            }
        };
        self.g
            .u_polys
            .iter()
            .map(|u| u.eval(n, &self.g.f, &assign))
            .collect()
    }
}

/// Flat index of a tuple of Lie-algebra elements (degree-major, row-major,
/// least significant first), matching the epsilon part of the element index.
pub fn tuple_index(p: u64, mats: &[FpMat]) -> u64 {
    let mut idx = 0u64;
    for m in mats.iter().rev() {
        let n = m.dim();
        for i in (0..n).rev() {
            for j in (0..n).rev() {
                idx = idx * p + m.get(i, j);
            }
        }
    }
    idx
}

pub fn tuple_decode(n: usize, p: u64, count: usize, mut idx: u64) -> Vec<FpMat> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut m = FpMat::zero(n, p);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, idx % p);
                idx /= p;
            }
        }
        out.push(m);
    }
    out
}

/// Membership condition for one conjugation polynomial, transported to the
/// standard frame by the coset representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cond {
    Free,
    InT,
    InB,
    /// In the Borel subalgebra but not in the torus.
    InBNotT,
    NotInB,
}

/// Condition on the conjugated base point w = x y x^{-1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseCond {
    InT,
    InB,
    InBNotT,
}

/// One term of the interpolation ladder: a base condition and one membership
/// condition per conjugation polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LadderSpec {
    pub base: BaseCond,
    pub conds: Vec<Cond>,
}

/// The ladder set with index i, for r-2r' <= i <= r. Indices at or above
/// r-r' carry the Borel-type conditions, lower indices the torus-type ones.
pub fn ladder_spec(r: usize, i: usize) -> LadderSpec {
    let rp = r / 2;
    assert!(i <= r && i + 2 * rp >= r, "ladder index out of range");
    let mut conds = vec![Cond::Free; r - 1];
    if i >= r - rp {
        for j in 1..i {
            conds[j - 1] = Cond::InB;
        }
        LadderSpec { base: BaseCond::InB, conds }
    } else {
        for j in 1..=(r - rp - 1) {
            conds[j - 1] = if j <= r - rp - i - 1 { Cond::InT } else { Cond::InB };
        }
        LadderSpec { base: BaseCond::InT, conds }
    }
}

/// Difference of consecutive upper ladder sets, for r-r' <= i <= r-1.
pub fn upper_piece_spec(r: usize, i: usize) -> LadderSpec {
    let rp = r / 2;
    assert!(i >= r - rp && i < r);
    let mut spec = ladder_spec(r, i);
    spec.conds[i - 1] = Cond::NotInB;
    spec
}

/// The junction piece between the two regimes: base point in B - T with all
/// the torus-regime Borel conditions.
pub fn junction_piece_spec(r: usize) -> LadderSpec {
    let rp = r / 2;
    let mut spec = ladder_spec(r, r - rp);
    spec.base = BaseCond::InBNotT;
    spec
}

/// Difference of consecutive lower ladder sets, for r-2r'+1 <= i <= r-r'-1.
pub fn lower_piece_spec(r: usize, i: usize) -> LadderSpec {
    let rp = r / 2;
    assert!(i + 2 * rp > r && i <= r - rp - 1);
    let mut spec = ladder_spec(r, i);
    // the set with index i-1 additionally forces u_(r-r'-i) into the torus
    spec.conds[r - rp - i - 1] = Cond::InBNotT;
    spec
}

fn matches_base(w: &FpMat, base: BaseCond) -> bool {
    match base {
        BaseCond::InT => w.is_diagonal(),
        BaseCond::InB => w.is_upper_triangular(),
        BaseCond::InBNotT => w.is_upper_triangular() && !w.is_diagonal(),
    }
}

fn matches_cond(framed: &FpMat, cond: Cond) -> bool {
    match cond {
        Cond::Free => true,
        Cond::InT => framed.is_diagonal(),
        Cond::InB => framed.is_upper_triangular(),
        Cond::InBNotT => framed.is_upper_triangular() && !framed.is_diagonal(),
        Cond::NotInB => !framed.is_upper_triangular(),
    }
}

impl CharCtx {
    /// Ladder sum by full enumeration of the Lie-algebra tuples; exact but
    /// only sensible when p^(n^2 (r-1)) is small.
    pub fn ladder_sum_enum(&self, g_prime: &Factored, spec: &LadderSpec) -> CycValue {
        let n = self.g.n;
        let p = self.g.p;
        let f = &self.g.f;
        let y = g_prime.x;
        let y_inv = y.inv(f).expect("group element");
        let count = self.g.r - 1;
        let total = p.pow((n * n * count) as u32);
        let mut acc = self.s.cyc.zero();
        for x in self.torus_reps() {
            let x_inv = x.inv(f).expect("coset representative");
            let w = y.conj_by(x, &x_inv);
            if !matches_base(&w, spec.base) {
                continue;
            }
            let lam = self
                .s
                .lambda0_index(&self.datum.lambda0, &w.diag_part().diagonal());
            let a_x: Vec<FpMat> = self.datum.a.iter().map(|a| a.conj_by(&x_inv, x)).collect();
            for t in 0..total {
                let xs = tuple_decode(n, p, count, t);
                let us = self.eval_us(&y, &y_inv, &xs, &g_prime.xs);
                let ok = us
                    .iter()
                    .zip(&spec.conds)
                    .all(|(u, &c)| matches_cond(&u.conj_by(x, &x_inv), c));
                if !ok {
                    continue;
                }
                let mut h = 0u64;
                for (a, u) in a_x.iter().zip(&us) {
                    h = f.add(h, a.pair(u));
                }
                self.s
                    .cyc
                    .add_root_assign(&mut acc, (lam + self.s.psi_index(h)) % self.s.cyc.n_root, 1);
            }
        }
        acc
    }

    /// The defining exponential sum of the induced-character counterpart:
    /// the ladder bottom (torus regime, all conditions active).
    pub fn t_k_at(&self, g_prime: &Factored) -> CycValue {
        let r = self.g.r;
        let rp = r / 2;
        self.ladder_sum_enum(g_prime, &ladder_spec(r, r - 2 * rp))
    }

    /// Ladder sum with the coordinates of index >= 2 eliminated exactly as
    /// an affine character sum; the first coordinate is enumerated. Valid
    /// for r <= 4, where the conjugation polynomials are jointly affine in
    /// the higher coordinates.
    pub fn ladder_sum_affine(&self, g_prime: &Factored, spec: &LadderSpec) -> CycValue {
        assert!(self.g.r <= 4, "higher coordinates stop being jointly affine");
        let complemented: Vec<usize> = (1..self.g.r - 1)
            .filter(|&k| matches!(spec.conds[k], Cond::NotInB | Cond::InBNotT))
            .collect();
        assert!(complemented.len() <= 1, "at most one complemented block condition");
        match complemented.first() {
            None => self.ladder_sum_affine_plain(g_prime, spec),
            Some(&k) => match spec.conds[k] {
                Cond::NotInB => {
                    let mut inside = spec.clone();
                    inside.conds[k] = Cond::InB;
                    let mut free = spec.clone();
                    free.conds[k] = Cond::Free;
                    let a = self.ladder_sum_affine_plain(g_prime, &free);
                    let b = self.ladder_sum_affine_plain(g_prime, &inside);
                    self.s.cyc.sub(&a, &b)
                }
                Cond::InBNotT => {
                    let mut in_b = spec.clone();
                    in_b.conds[k] = Cond::InB;
                    let mut in_t = spec.clone();
                    in_t.conds[k] = Cond::InT;
                    let a = self.ladder_sum_affine_plain(g_prime, &in_b);
                    let b = self.ladder_sum_affine_plain(g_prime, &in_t);
                    self.s.cyc.sub(&a, &b)
                }
                _ => unreachable!(),
            },
        }
    }

    fn ladder_sum_affine_plain(&self, g_prime: &Factored, spec: &LadderSpec) -> CycValue {
        let n = self.g.n;
        let p = self.g.p;
        let f = &self.g.f;
        let r = self.g.r;
        let y = g_prime.x;
        let y_inv = y.inv(f).expect("group element");
        let x1_total = p.pow((n * n) as u32);
        // flattened block of (X_2, ..., X_(r-1))
        let nvars = (r.max(2) - 2) * n * n;
        let unit = |v: usize| -> (usize, FpMat) {
            let which = v / (n * n);
            let pos = v % (n * n);
            (which, FpMat::unit(n, p, pos / n, pos % n))
        };
        let mut acc = self.s.cyc.zero();
        for x in self.torus_reps() {
            let x_inv = x.inv(f).expect("coset representative");
            let w = y.conj_by(x, &x_inv);
            if !matches_base(&w, spec.base) {
                continue;
            }
            let lam = self
                .s
                .lambda0_index(&self.datum.lambda0, &w.diag_part().diagonal());
            let a_x: Vec<FpMat> = self.datum.a.iter().map(|a| a.conj_by(&x_inv, x)).collect();
            let below: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
            let offdiag: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|&(i, j)| i != j)
                .collect();
            let mut coset_acc = self.s.cyc.zero();
            for t in 0..x1_total {
                let mut xs = tuple_decode(n, p, 1, t);
                xs.extend(std::iter::repeat(FpMat::zero(n, p)).take(r - 2));
                let us0 = self.eval_us(&y, &y_inv, &xs, &g_prime.xs);
                if !matches_cond(&us0[0].conj_by(x, &x_inv), spec.conds[0]) {
                    continue;
                }
                // affine structure of u_j (j >= 2) over the block
                let mut cols: Vec<Vec<FpMat>> = Vec::with_capacity(nvars);
                for v in 0..nvars {
                    let (which, e) = unit(v);
                    let mut probe = xs.clone();
                    probe[1 + which] = e;
                    let us1 = self.eval_us(&y, &y_inv, &probe, &g_prime.xs);
                    cols.push(us1.iter().zip(&us0).map(|(u1, u0)| u1.sub(u0)).collect());
                }
                // membership rows and right-hand sides
                let mut rows: Vec<Vec<u64>> = Vec::new();
                let mut rhs: Vec<u64> = Vec::new();
                for (uj, &c) in spec.conds.iter().enumerate().skip(1) {
                    let positions: &[(usize, usize)] = match c {
                        Cond::Free => continue,
                        Cond::InB => &below,
                        Cond::InT => &offdiag,
                        _ => unreachable!("complemented conditions handled by the caller"),
                    };
                    for &(ai, aj) in positions {
                        let row: Vec<u64> = cols
                            .iter()
                            .map(|cvec| cvec[uj].conj_by(x, &x_inv).get(ai, aj))
                            .collect();
                        rows.push(row);
                        rhs.push(f.neg(us0[uj].conj_by(x, &x_inv).get(ai, aj)));
                    }
                }
                // linear form of the exponent over the block, plus constant
                let mut h0 = 0u64;
                for (a, u) in a_x.iter().zip(&us0) {
                    h0 = f.add(h0, a.pair(u));
                }
                let f_lin: Vec<u64> = cols
                    .iter()
                    .map(|cvec| {
                        let mut v = 0u64;
                        for (a, u) in a_x.iter().zip(cvec) {
                            v = f.add(v, a.pair(u));
                        }
                        v
                    })
                    .collect();
                let part = affine_char_sum(&self.s, nvars, &rows, &rhs, &f_lin, h0);
                self.s.cyc.add_assign(&mut coset_acc, &part);
            }
            let shifted = self.s.cyc.mul(&coset_acc, &self.s.cyc.root(lam));
            self.s.cyc.add_assign(&mut acc, &shifted);
        }
        acc
    }

    /// Ladder value; enumerates when the tuple space is small and falls back
    /// to the affine elimination otherwise.
    pub fn t_l_i(&self, g_prime: &Factored, i: usize) -> CycValue {
        let spec = ladder_spec(self.g.r, i);
        let tuple_space = (self.g.p as u128).pow((self.g.n * self.g.n * (self.g.r - 1)) as u32);
        if tuple_space <= 1 << 16 {
            self.ladder_sum_enum(g_prime, &spec)
        } else {
            self.ladder_sum_affine(g_prime, &spec)
        }
    }
}

/// Sum of psi(<f_lin, v> + c) over the affine solution set {v : rows v = rhs}
/// inside F_p^nvars. Zero when the system is inconsistent or the form is
/// nonconstant on the solution set; otherwise p^(dim kernel) psi(value).
pub fn affine_char_sum(
    s: &Scalars,
    nvars: usize,
    rows: &[Vec<u64>],
    rhs: &[u64],
    f_lin: &[u64],
    c: u64,
) -> CycValue {
    let p = s.field.p;
    let f = &s.field;
    if nvars == 0 {
        return if rhs.iter().all(|&b| b % p == 0) { s.psi(c) } else { s.cyc.zero() };
    }
    let Some(v0) = crate::linalg::solve(rows, rhs, p, f) else {
        return s.cyc.zero();
    };
    // the form is constant on the solution set iff it lies in the row space
    let mut m: Vec<Vec<u64>> = rows.to_vec();
    let rank = crate::linalg::rref(&mut m, p, f).len();
    let mut m2: Vec<Vec<u64>> = rows.to_vec();
    m2.push(f_lin.to_vec());
    let rank2 = crate::linalg::rref(&mut m2, p, f).len();
    if rank2 > rank {
        return s.cyc.zero();
    }
    let kernel_dim = nvars - rank;
    let mut val = c;
    for (&a, &b) in f_lin.iter().zip(&v0) {
        val = f.add(val, f.mul(a, b));
    }
    let size = (p as u128).pow(kernel_dim as u32);
    s.cyc.scale(&s.psi(val), i64::try_from(size).expect("fiber size fits"))
}

/// The four vanishing sums behind the ladder collapse, each summed over the
/// small affine piece of its stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VanishCase {
    /// Base point in B - T; sum over the top coordinate ranging over gl_n.
    OffTorusFullSpace,
    /// Base point in T, u_1 in b - t; sum over the orbit of the shift action
    /// on the middle coordinates, parametrized by gl_n (needs r = 4).
    CentralizerOrbit,
    /// u_(r-1) outside the Borel subalgebra; sum over the unipotent cosets
    /// refining the Borel coset of the representative.
    UnipotentCosets,
    /// u_2 outside the Borel subalgebra; sum over a nil-radical line with
    /// the other two nil-radical shifts fixed (needs r = 4).
    NilRadicalLine,
}

/// A sampled stratum point: coset representative, base point, tuples.
#[derive(Debug, Clone)]
pub struct StratumSample {
    pub x: FpMat,
    pub y: FpMat,
    pub xs: Vec<FpMat>,
    pub ys: Vec<FpMat>,
    /// Fixed nil-radical shifts for the line case.
    pub aux: Vec<FpMat>,
}

impl CharCtx {
    pub fn rand_mat(&self, rng: &mut SplitMix64) -> FpMat {
        let mut m = FpMat::zero(self.g.n, self.g.p);
        for i in 0..self.g.n {
            for j in 0..self.g.n {
                m.set(i, j, rng.fp(self.g.p));
            }
        }
        m
    }

    pub fn rand_invertible(&self, rng: &mut SplitMix64) -> FpMat {
        loop {
            let m = self.rand_mat(rng);
            if m.is_invertible(&self.g.f) {
                return m;
            }
        }
    }

    fn rand_borel_elt(&self, rng: &mut SplitMix64, strict: bool) -> FpMat {
        loop {
            let mut m = FpMat::zero(self.g.n, self.g.p);
            for i in 0..self.g.n {
                m.set(i, i, 1 + rng.below(self.g.p - 1));
                for j in (i + 1)..self.g.n {
                    m.set(i, j, rng.fp(self.g.p));
                }
            }
            if !strict || !m.is_diagonal() {
                return m;
            }
        }
    }

    fn rand_borel_alg(&self, rng: &mut SplitMix64, off_torus: bool) -> FpMat {
        loop {
            let mut m = FpMat::zero(self.g.n, self.g.p);
            for i in 0..self.g.n {
                for j in i..self.g.n {
                    m.set(i, j, rng.fp(self.g.p));
                }
            }
            if !off_torus || !m.is_diagonal() {
                return m;
            }
        }
    }

    fn rand_non_borel_alg(&self, rng: &mut SplitMix64) -> FpMat {
        loop {
            let m = self.rand_mat(rng);
            if !m.is_upper_triangular() {
                return m;
            }
        }
    }

    /// Draws a point of the stratum for the given case. The coordinates are
    /// solved sequentially so the membership conditions hold exactly.
    pub fn sample_stratum(&self, case: VanishCase, rng: &mut SplitMix64) -> StratumSample {
        let n = self.g.n;
        let p = self.g.p;
        let f = &self.g.f;
        let r = self.g.r;
        let rp = r / 2;
        let x = self.rand_invertible(rng);
        let x_inv = x.inv(f).unwrap();
        let w = match case {
            VanishCase::OffTorusFullSpace => self.rand_borel_elt(rng, true),
            VanishCase::CentralizerOrbit => {
                FpMat::diag(p, &(0..n).map(|_| 1 + rng.below(p - 1)).collect::<Vec<_>>())
            }
            VanishCase::UnipotentCosets | VanishCase::NilRadicalLine => self.rand_borel_elt(rng, false),
        };
        let y = w.conj_by(&x_inv, &x);
        let y_inv = y.inv(f).unwrap();
        let xs: Vec<FpMat> = (0..r - 1).map(|_| self.rand_mat(rng)).collect();
        // choose Y_j sequentially so that u_j hits the required frame target
        let mut ys: Vec<FpMat> = Vec::with_capacity(r - 1);
        for j in 1..r {
            let target_framed = match case {
                VanishCase::OffTorusFullSpace => {
                    (j <= r - rp - 1).then(|| self.rand_borel_alg(rng, false))
                }
                VanishCase::CentralizerOrbit => (j == 1).then(|| self.rand_borel_alg(rng, true)),
                VanishCase::UnipotentCosets => Some(if j <= r - 2 {
                    self.rand_borel_alg(rng, false)
                } else {
                    self.rand_non_borel_alg(rng)
                }),
                VanishCase::NilRadicalLine => match j {
                    1 => Some(self.rand_borel_alg(rng, false)),
                    2 => Some(self.rand_non_borel_alg(rng)),
                    _ => None,
                },
            };
            match target_framed {
                None => ys.push(self.rand_mat(rng)),
                Some(target) => {
                    // u_j is Y_j plus terms not involving Y_j
                    let mut probe = ys.clone();
                    probe.push(FpMat::zero(n, p));
                    probe.extend(std::iter::repeat(FpMat::zero(n, p)).take(r - 1 - j));
                    let us = self.eval_us(&y, &y_inv, &xs, &probe);
                    ys.push(target.conj_by(&x_inv, &x).sub(&us[j - 1]));
                }
            }
        }
        let aux = match case {
            VanishCase::NilRadicalLine => (0..2)
                .map(|_| {
                    let mut m = FpMat::zero(n, p);
                    for i in 0..n {
                        for j in (i + 1)..n {
                            m.set(i, j, rng.fp(p));
                        }
                    }
                    m
                })
                .collect(),
            _ => Vec::new(),
        };
        StratumSample { x, y, xs, ys, aux }
    }

    fn validate_stratum(&self, case: VanishCase, sample: &StratumSample) -> Result<(), Error> {
        let f = &self.g.f;
        let r = self.g.r;
        let rp = r / 2;
        let x_inv = sample.x.inv(f).ok_or(Error::Singular)?;
        let y_inv = sample.y.inv(f).ok_or(Error::Singular)?;
        let w = sample.y.conj_by(&sample.x, &x_inv);
        let us = self.eval_us(&sample.y, &y_inv, &sample.xs, &sample.ys);
        let framed: Vec<FpMat> = us.iter().map(|u| u.conj_by(&sample.x, &x_inv)).collect();
        let fail = |msg: &str| Err(Error::StratumViolation(msg.into()));
        match case {
            VanishCase::OffTorusFullSpace => {
                if !w.is_upper_triangular() || w.is_diagonal() {
                    return fail("base point must lie in B - T");
                }
                for j in 1..=(r - rp - 1) {
                    if !framed[j - 1].is_upper_triangular() {
                        return fail("lower conjugation polynomial left the Borel subalgebra");
                    }
                }
            }
            VanishCase::CentralizerOrbit => {
                if r != 4 {
                    return fail("orbit case needs r = 4");
                }
                if !w.is_diagonal() {
                    return fail("base point must lie in T");
                }
                if !framed[0].is_upper_triangular() || framed[0].is_diagonal() {
                    return fail("u_1 must lie in b - t");
                }
            }
            VanishCase::UnipotentCosets => {
                if !w.is_upper_triangular() {
                    return fail("base point must lie in B");
                }
                for j in 1..=(r - 2) {
                    if !framed[j - 1].is_upper_triangular() {
                        return fail("lower conjugation polynomial left the Borel subalgebra");
                    }
                }
                if framed[r - 2].is_upper_triangular() {
                    return fail("top conjugation polynomial must leave the Borel subalgebra");
                }
            }
            VanishCase::NilRadicalLine => {
                if r != 4 {
                    return fail("nil-line case needs r = 4");
                }
                if !w.is_upper_triangular() {
                    return fail("base point must lie in B");
                }
                if !framed[0].is_upper_triangular() {
                    return fail("u_1 must lie in the Borel subalgebra");
                }
                if framed[1].is_upper_triangular() {
                    return fail("u_2 must leave the Borel subalgebra");
                }
            }
        }
        Ok(())
    }

    fn h_at(&self, a_x: &[FpMat], y: &FpMat, y_inv: &FpMat, xs: &[FpMat], ys: &[FpMat]) -> u64 {
        let us = self.eval_us(y, y_inv, xs, ys);
        let mut h = 0u64;
        for (a, u) in a_x.iter().zip(&us) {
            h = self.g.f.add(h, a.pair(u));
        }
        h
    }

    /// The exponential sum over the affine piece of the given stratum; the
    /// returned value must be zero. For the nil-line case the closed form of
    /// the restriction is also checked against direct evaluation.
    pub fn vanishing_sum(&self, case: VanishCase, sample: &StratumSample) -> Result<CycValue, Error> {
        self.validate_stratum(case, sample)?;
        let n = self.g.n;
        let p = self.g.p;
        let f = &self.g.f;
        let r = self.g.r;
        let x_inv = sample.x.inv(f).ok_or(Error::Singular)?;
        let y_inv = sample.y.inv(f).ok_or(Error::Singular)?;
        let a_x: Vec<FpMat> = self.datum.a.iter().map(|a| a.conj_by(&x_inv, &sample.x)).collect();
        let mut acc = self.s.cyc.zero();
        match case {
            VanishCase::OffTorusFullSpace => {
                // the restriction form <_x A_(r-1), Ad(y^-1) X - X> must not
                // vanish identically; off the torus it never does
                let a_last = a_x[r - 2];
                let grad = a_last.conj_by(&sample.y, &y_inv).sub(&a_last);
                if grad == FpMat::zero(n, p) {
                    return Err(Error::StratumViolation(
                        "restriction form vanished identically".into(),
                    ));
                }
                let total = p.pow((n * n) as u32);
                for t in 0..total {
                    let mut xs = sample.xs.clone();
                    xs[r - 2] = tuple_decode(n, p, 1, t)[0];
                    let h = self.h_at(&a_x, &sample.y, &y_inv, &xs, &sample.ys);
                    self.s.cyc.add_root_assign(&mut acc, self.s.psi_index(h), 1);
                }
            }
            VanishCase::CentralizerOrbit => {
                let total = p.pow((n * n) as u32);
                for t in 0..total {
                    let e = tuple_decode(n, p, 1, t)[0];
                    let mut xs = sample.xs.clone();
                    xs[1] = xs[1].add(&e);
                    xs[2] = xs[2].add(&e.bracket(&sample.xs[0]));
                    let h = self.h_at(&a_x, &sample.y, &y_inv, &xs, &sample.ys);
                    self.s.cyc.add_root_assign(&mut acc, self.s.psi_index(h), 1);
                }
            }
            VanishCase::UnipotentCosets => {
                // the piece refines the Borel coset: replace x by u x
                let us = self.eval_us(&sample.y, &y_inv, &sample.xs, &sample.ys);
                for uidx in 0..p.pow((n * (n - 1) / 2) as u32) {
                    let mut u = FpMat::identity(n, p);
                    let mut c = uidx;
                    for i in 0..n {
                        for j in (i + 1)..n {
                            u.set(i, j, c % p);
                            c /= p;
                        }
                    }
                    let ux = u.mul(&sample.x);
                    let ux_inv = ux.inv(f).ok_or(Error::Singular)?;
                    let mut h = 0u64;
                    for (a, uj) in self.datum.a.iter().zip(&us) {
                        h = f.add(h, a.conj_by(&ux_inv, &ux).pair(uj));
                    }
                    self.s.cyc.add_root_assign(&mut acc, self.s.psi_index(h), 1);
                }
            }
            VanishCase::NilRadicalLine => {
                let half = f.inv(2);
                let third = f.inv(3);
                let sixth = f.inv(6 % p);
                let e1x = sample.aux[0].conj_by(&x_inv, &sample.x);
                let e2x = sample.aux[1].conj_by(&x_inv, &sample.x);
                let x1 = sample.xs[0];
                // closed-form data: S = u_2 and the transported A_3
                let us = self.eval_us(&sample.y, &y_inv, &sample.xs, &sample.ys);
                let s_mat = us[1];
                let a3_x = a_x[2];
                // constant term fitted at E = 0 for the fixed shifts
                let c0 = {
                    let mut b = sample.xs.clone();
                    b[1] = sample.xs[1].add(&e1x);
                    b[2] = sample.xs[2].add(&e2x).add(&e1x.bracket(&x1));
                    self.h_at(&a_x, &sample.y, &y_inv, &b, &sample.ys)
                };
                for t in 0..p.pow((n * (n - 1) / 2) as u32) {
                    let mut e = FpMat::zero(n, p);
                    let mut c = t;
                    for i in 0..n {
                        for j in (i + 1)..n {
                            e.set(i, j, c % p);
                            c /= p;
                        }
                    }
                    let ex = e.conj_by(&x_inv, &sample.x);
                    let mut xs = sample.xs.clone();
                    xs[0] = x1.add(&ex);
                    xs[1] = sample.xs[1].add(&e1x).add(&ex.bracket(&x1).scale(half));
                    xs[2] = sample.xs[2]
                        .add(&e2x)
                        .add(&e1x.bracket(&x1))
                        .sub(&ex.bracket(&ex.bracket(&x1)).scale(sixth))
                        .sub(&x1.bracket(&ex.bracket(&x1)).scale(third));
                    let h = self.h_at(&a_x, &sample.y, &y_inv, &xs, &sample.ys);
                    self.s.cyc.add_root_assign(&mut acc, self.s.psi_index(h), 1);
                    // restriction closed form: h(E) = <S, [_x A_3, _x E]> + c
                    let predicted = f.add(c0, s_mat.pair(&a3_x.bracket(&ex)));
                    if h != predicted {
                        return Err(Error::StratumViolation(
                            "closed form of the nil-line restriction failed".into(),
                        ));
                    }
                }
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grgroup::decode_fp;

    fn ctx_r2() -> CharCtx {
        let datum = Datum { a: vec![FpMat::diag(3, &[1, 2])], lambda0: vec![1, 0] };
        CharCtx::new(2, 3, 2, datum).unwrap()
    }

    #[test]
    fn datum_validation() {
        assert!(Datum { a: vec![FpMat::diag(3, &[1, 1])], lambda0: vec![1, 0] }
            .validate(2, 3, 2)
            .is_err());
        assert!(Datum { a: vec![], lambda0: vec![1, 0] }.validate(2, 3, 2).is_err());
        assert!(Datum { a: vec![], lambda0: vec![1, 0] }.validate(2, 3, 1).is_ok());
    }

    #[test]
    fn lambda_tilde_is_multiplicative_and_trivial_on_u() {
        let ctx = ctx_r2();
        let borel = ctx.g.enumerate(Subgroup::Br, false).unwrap();
        let mut rng = SplitMix64::new(51);
        for _ in 0..1000 {
            let b1 = KrMat::from_index(2, 2, 3, borel[rng.below(borel.len() as u64) as usize]);
            let b2 = KrMat::from_index(2, 2, 3, borel[rng.below(borel.len() as u64) as usize]);
            let lhs = ctx.lambda_tilde_index(&b1.mul(&b2)).unwrap();
            let rhs = (ctx.lambda_tilde_index(&b1).unwrap() + ctx.lambda_tilde_index(&b2).unwrap())
                % ctx.s.cyc.n_root;
            assert_eq!(lhs, rhs);
        }
        for &uidx in &ctx.g.enumerate(Subgroup::Ur, false).unwrap() {
            let u = KrMat::from_index(2, 2, 3, uidx);
            assert_eq!(ctx.lambda_tilde_index(&u).unwrap(), 0);
        }
        assert_eq!(ctx.lambda_tilde_index(&KrMat::identity(2, 2, 3)).unwrap(), 0);
    }

    #[test]
    fn induced_table_r2() {
        let ctx = ctx_r2();
        let t_l = ctx.induced_t_l_full(false).unwrap();
        assert_eq!(t_l.table.len(), 3888);
        // value at the identity is the index [G_r : B_r] = 12
        let id = KrMat::identity(2, 2, 3).index();
        assert_eq!(t_l.table[&id], ctx.s.cyc.from_int(12));
        // conjugation invariance, sampled
        let group = ctx.g.enumerate(Subgroup::Gr, false).unwrap();
        let mut rng = SplitMix64::new(53);
        for _ in 0..200 {
            let g = KrMat::from_index(2, 2, 3, group[rng.below(group.len() as u64) as usize]);
            let h = KrMat::from_index(2, 2, 3, group[rng.below(group.len() as u64) as usize]);
            let conj = h.mul(&g).mul(&h.inv(&ctx.g.f).unwrap());
            assert_eq!(t_l.table[&g.index()], t_l.table[&conj.index()]);
        }
        // the per-element coset-representative route agrees with the table
        for _ in 0..50 {
            let g = KrMat::from_index(2, 2, 3, group[rng.below(group.len() as u64) as usize]);
            assert_eq!(ctx.t_l_at(&g, false).unwrap(), t_l.table[&g.index()]);
        }
    }

    #[test]
    fn norm_one_for_generic_datum() {
        let ctx = ctx_r2();
        let t_l = ctx.induced_t_l_full(false).unwrap();
        let norm = ctx.inner_product(&t_l, &t_l).unwrap();
        assert_eq!(norm, ctx.s.cyc.from_int(1));
    }

    #[test]
    fn norm_exceeds_one_for_degenerate_datum() {
        let datum = Datum { a: vec![FpMat::diag(3, &[0, 0])], lambda0: vec![0, 0] };
        let ctx = CharCtx::new_unchecked(2, 3, 2, datum).unwrap();
        let t_l = ctx.induced_t_l_full(false).unwrap();
        let norm = ctx.inner_product(&t_l, &t_l).unwrap();
        let as_int = ctx.s.cyc.as_int(&norm).expect("norm is a rational integer");
        assert!(as_int > 1, "degenerate norm should exceed 1, got {as_int}");
    }

    #[test]
    fn r1_baseline_norms() {
        // classical principal series: norm 1 for regular, 2 for trivial
        let regular = Datum { a: vec![], lambda0: vec![1, 0] };
        let ctx = CharCtx::new(2, 3, 1, regular).unwrap();
        let t_l = ctx.induced_t_l_full(false).unwrap();
        assert_eq!(t_l.table.len(), 48);
        assert_eq!(ctx.inner_product(&t_l, &t_l).unwrap(), ctx.s.cyc.from_int(1));
        let trivial = Datum { a: vec![], lambda0: vec![0, 0] };
        let ctx = CharCtx::new(2, 3, 1, trivial).unwrap();
        let t_l = ctx.induced_t_l_full(false).unwrap();
        assert_eq!(ctx.inner_product(&t_l, &t_l).unwrap(), ctx.s.cyc.from_int(2));
    }

    #[test]
    fn t_k_identity_value_r2() {
        // at the identity the sum has no constraints: 12 cosets x 81 points
        let ctx = ctx_r2();
        let id = Factored { x: FpMat::identity(2, 3), xs: vec![FpMat::zero(2, 3)] };
        assert_eq!(ctx.t_k_at(&id), ctx.s.cyc.from_int(12 * 81));
    }

    #[test]
    fn t_k_vanishes_off_split_elements() {
        // y with irreducible characteristic polynomial has no conjugate in T
        let ctx = ctx_r2();
        let y = FpMat::from_rows(3, &[&[0, 2], &[1, 0]]);
        let g = Factored { x: y, xs: vec![FpMat::zero(2, 3)] };
        assert!(ctx.s.cyc.is_zero(&ctx.t_k_at(&g)));
    }

    #[test]
    fn ladder_enum_and_affine_agree_r3() {
        let datum = Datum {
            a: vec![FpMat::diag(3, &[1, 2]), FpMat::diag(3, &[1, 2])],
            lambda0: vec![1, 0],
        };
        let ctx = CharCtx::new(2, 3, 3, datum).unwrap();
        let mut rng = SplitMix64::new(57);
        for _ in 0..8 {
            let y = loop {
                let m = decode_fp(2, 3, rng.below(81));
                if m.is_invertible(&ctx.g.f) {
                    break m;
                }
            };
            let g = Factored {
                x: y,
                xs: vec![decode_fp(2, 3, rng.below(81)), decode_fp(2, 3, rng.below(81))],
            };
            for i in 1..=3 {
                let spec = ladder_spec(3, i);
                let a = ctx.ladder_sum_enum(&g, &spec);
                let b = ctx.ladder_sum_affine(&g, &spec);
                assert_eq!(a, b, "ladder index {i}");
            }
            // pieces agree between the two evaluators as well
            let spec = upper_piece_spec(3, 2);
            assert_eq!(ctx.ladder_sum_enum(&g, &spec), ctx.ladder_sum_affine(&g, &spec));
            let spec = junction_piece_spec(3);
            assert_eq!(ctx.ladder_sum_enum(&g, &spec), ctx.ladder_sum_affine(&g, &spec));
        }
    }

    #[test]
    fn ladder_specs_have_expected_shape() {
        // r = 4: indices 0..4; top is all-Borel, bottom is the torus regime
        let top = ladder_spec(4, 4);
        assert_eq!(top.base, BaseCond::InB);
        assert_eq!(top.conds, vec![Cond::InB, Cond::InB, Cond::InB]);
        let bottom = ladder_spec(4, 0);
        assert_eq!(bottom.base, BaseCond::InT);
        assert_eq!(bottom.conds, vec![Cond::InT, Cond::Free, Cond::Free]);
        let mid = ladder_spec(4, 1);
        assert_eq!(mid.base, BaseCond::InT);
        assert_eq!(mid.conds, vec![Cond::InB, Cond::Free, Cond::Free]);
        // r = 3: bottom carries the odd-case Borel condition
        let bot3 = ladder_spec(3, 1);
        assert_eq!(bot3.base, BaseCond::InT);
        assert_eq!(bot3.conds, vec![Cond::InB, Cond::Free]);
        // r = 2: bottom is the unconstrained torus sum
        let bot2 = ladder_spec(2, 0);
        assert_eq!(bot2.base, BaseCond::InT);
        assert_eq!(bot2.conds, vec![Cond::Free]);
    }

    #[test]
    fn vanishing_sums_small_sample() {
        let ctx = ctx_r2();
        let mut rng = SplitMix64::new(61);
        for _ in 0..50 {
            let s = ctx.sample_stratum(VanishCase::OffTorusFullSpace, &mut rng);
            let v = ctx.vanishing_sum(VanishCase::OffTorusFullSpace, &s).unwrap();
            assert!(ctx.s.cyc.is_zero(&v));
            let s = ctx.sample_stratum(VanishCase::UnipotentCosets, &mut rng);
            let v = ctx.vanishing_sum(VanishCase::UnipotentCosets, &s).unwrap();
            assert!(ctx.s.cyc.is_zero(&v));
        }
        // degenerate guard: a base point in T violates the off-torus stratum
        let mut s = ctx.sample_stratum(VanishCase::OffTorusFullSpace, &mut rng);
        s.y = FpMat::identity(2, 3);
        assert!(matches!(
            ctx.vanishing_sum(VanishCase::OffTorusFullSpace, &s),
            Err(Error::StratumViolation(_))
        ));
    }
}
