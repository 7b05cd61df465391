//! The group G_r(F_q) = GL_n(F_q[e]/(e^r)) in two models: truncated
//! polynomial matrices (the oracle) and factored coordinates
//! x|X_1,...,X_(r-1)| = x e^(eX_1) ... e^(e^(r-1)X_(r-1)) with the BCH-based
//! group law. Also: the standard subgroups, the diagonal-part homomorphism,
//! canonical element indexing and enumeration, and coset representatives.

use crate::bch::{BchTables, CompiledLiePoly, Sym, SymKind};
use crate::fp::FieldCtx;
use crate::linalg::{FpMat, MAX_N};
use crate::Error;

pub const MAX_R: usize = 6;

/// Full-enumeration guard: refuse tables larger than this unless forced.
pub const ENUM_BUDGET: u128 = 1 << 24;

/// Matrix over F_p[e]/(e^r); coefficient k of entry (i,j) at `a[(k n + i) n + j]`.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash)]
pub struct KrMat {
    pub n: u8,
    pub r: u8,
    pub p: u64,
    a: [u64; MAX_N * MAX_N * MAX_R],
}

impl KrMat {
    pub fn zero(n: usize, r: usize, p: u64) -> KrMat {
        assert!(n >= 1 && n <= MAX_N && r >= 1 && r <= MAX_R);
        KrMat { n: n as u8, r: r as u8, p, a: [0; MAX_N * MAX_N * MAX_R] }
    }

    pub fn identity(n: usize, r: usize, p: u64) -> KrMat {
        let mut m = KrMat::zero(n, r, p);
        for i in 0..n {
            m.set(0, i, i, 1);
        }
        m
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> u64 {
        self.a[(k * self.n as usize + i) * self.n as usize + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: u64) {
        self.a[(k * self.n as usize + i) * self.n as usize + j] = v % self.p;
    }

    pub fn from_const(x: &FpMat, r: usize) -> KrMat {
        let n = x.dim();
        let mut m = KrMat::zero(n, r, x.p);
        for i in 0..n {
            for j in 0..n {
                m.set(0, i, j, x.get(i, j));
            }
        }
        m
    }

    pub fn coeff(&self, k: usize) -> FpMat {
        let n = self.n as usize;
        let mut m = FpMat::zero(n, self.p);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.get(k, i, j));
            }
        }
        m
    }

    pub fn mul(&self, o: &KrMat) -> KrMat {
        assert_eq!((self.n, self.r, self.p), (o.n, o.r, o.p));
        let (n, r, p) = (self.n as usize, self.r as usize, self.p);
        let mut out = KrMat::zero(n, r, p);
        for k1 in 0..r {
            for k2 in 0..(r - k1) {
                let k = k1 + k2;
                for i in 0..n {
                    for l in 0..n {
                        let x = self.get(k1, i, l);
                        if x == 0 {
                            continue;
                        }
                        for j in 0..n {
                            let v = (out.get(k, i, j) + x * o.get(k2, l, j)) % p;
                            out.set(k, i, j, v);
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_invertible(&self, f: &FieldCtx) -> bool {
        self.coeff(0).is_invertible(f)
    }

    /// Inverse via the geometric series in the nilpotent part.
    pub fn inv(&self, f: &FieldCtx) -> Result<KrMat, Error> {
        let (n, r) = (self.n as usize, self.r as usize);
        let c0_inv = self.coeff(0).inv(f).ok_or(Error::Singular)?;
        let g0_inv = KrMat::from_const(&c0_inv, r);
        // self = g0 (1 + N) with N a multiple of e; (1+N)^-1 = sum (-N)^m
        let mut nil = g0_inv.mul(self);
        for i in 0..n {
            nil.set(0, i, i, f.sub(nil.get(0, i, i), 1));
        }
        let mut acc = KrMat::identity(n, r, self.p);
        let mut pow = KrMat::identity(n, r, self.p);
        for m in 1..r {
            pow = pow.mul(&nil);
            let sign = m % 2 == 1;
            for k in 0..r {
                for i in 0..n {
                    for j in 0..n {
                        let v = pow.get(k, i, j);
                        let cur = acc.get(k, i, j);
                        acc.set(k, i, j, if sign { f.sub(cur, v) } else { f.add(cur, v) });
                    }
                }
            }
        }
        Ok(acc.mul(&g0_inv))
    }

    pub fn in_borel(&self) -> bool {
        let (n, r) = (self.n as usize, self.r as usize);
        for k in 0..r {
            for i in 0..n {
                for j in 0..i {
                    if self.get(k, i, j) != 0 {
                        return false;
                    }
                }
            }
        }
        (0..n).all(|i| self.get(0, i, i) != 0)
    }

    pub fn in_torus(&self) -> bool {
        let (n, r) = (self.n as usize, self.r as usize);
        for k in 0..r {
            for i in 0..n {
                for j in 0..n {
                    if i != j && self.get(k, i, j) != 0 {
                        return false;
                    }
                }
            }
        }
        (0..n).all(|i| self.get(0, i, i) != 0)
    }

    pub fn in_unipotent(&self) -> bool {
        if !self.in_borel() {
            return false;
        }
        let (n, r) = (self.n as usize, self.r as usize);
        for i in 0..n {
            if self.get(0, i, i) != 1 {
                return false;
            }
            for k in 1..r {
                if self.get(k, i, i) != 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Canonical index: base-p digits of all coefficients, degree-major then
    /// row-major, least significant digit first.
    pub fn index(&self) -> u64 {
        let (n, r, p) = (self.n as usize, self.r as usize, self.p);
        let mut idx = 0u64;
        for k in (0..r).rev() {
            for i in (0..n).rev() {
                for j in (0..n).rev() {
                    idx = idx * p + self.get(k, i, j);
                }
            }
        }
        idx
    }

    pub fn from_index(n: usize, r: usize, p: u64, mut idx: u64) -> KrMat {
        let mut m = KrMat::zero(n, r, p);
        for k in 0..r {
            for i in 0..n {
                for j in 0..n {
                    m.set(k, i, j, idx % p);
                    idx /= p;
                }
            }
        }
        m
    }
}

/// Element in factored coordinates: constant part and one Lie-algebra
/// coordinate per epsilon degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factored {
    pub x: FpMat,
    pub xs: Vec<FpMat>,
}

/// Context for one (n, p, r): field, inverse factorials, compiled BCH tables.
#[derive(Debug, Clone)]
pub struct GroupCtx {
    pub n: usize,
    pub p: u64,
    pub r: usize,
    pub f: FieldCtx,
    inv_fact: Vec<u64>,
    pub z_polys: Vec<CompiledLiePoly>,
    pub u_polys: Vec<CompiledLiePoly>,
    pub u_prime_polys: Vec<CompiledLiePoly>,
}

impl GroupCtx {
    pub fn new(n: usize, p: u64, r: usize) -> Result<GroupCtx, Error> {
        if n < 1 || n > MAX_N {
            return Err(Error::Config(format!("n = {n} outside supported range 1..={MAX_N}")));
        }
        if r < 1 || r > MAX_R {
            return Err(Error::Config(format!("r = {r} outside supported range 1..={MAX_R}")));
        }
        let f = FieldCtx::new(p)?;
        if (p as usize) < r {
            return Err(Error::Config(format!("p >= r violated: p = {p}, r = {r}")));
        }
        let mut inv_fact = vec![1u64; r];
        for k in 1..r {
            let fact = (1..=k as u64).fold(1u64, |acc, v| f.mul(acc, v % p));
            inv_fact[k] = f.inv(fact);
        }
        let (z_polys, u_polys, u_prime_polys) = if r >= 2 {
            let tables = BchTables::new(r as u64)?;
            (
                tables.z.iter().map(|q| q.compile(&f)).collect(),
                tables.u.iter().map(|q| q.compile(&f)).collect(),
                tables.u_prime.iter().map(|q| q.compile(&f)).collect(),
            )
        } else {
            (Vec::new(), Vec::new(), Vec::new())
        };
        Ok(GroupCtx { n, p, r, f, inv_fact, z_polys, u_polys, u_prime_polys })
    }

    /// e^(e^m X) as a truncated polynomial matrix.
    pub fn exp_eps(&self, m: usize, x: &FpMat) -> KrMat {
        assert!(m >= 1 && m < self.r.max(2));
        let mut out = KrMat::identity(self.n, self.r, self.p);
        let mut pow = FpMat::identity(self.n, self.p);
        let mut k = 1;
        while k * m < self.r {
            pow = pow.mul(x);
            let scaled = pow.scale(self.inv_fact[k]);
            for i in 0..self.n {
                for j in 0..self.n {
                    out.set(k * m, i, j, self.f.add(out.get(k * m, i, j), scaled.get(i, j)));
                }
            }
            k += 1;
        }
        out
    }

    pub fn from_factored(&self, e: &Factored) -> KrMat {
        let mut out = KrMat::from_const(&e.x, self.r);
        for (k, xk) in e.xs.iter().enumerate() {
            out = out.mul(&self.exp_eps(k + 1, xk));
        }
        out
    }

    /// Peels the factored coordinates of an invertible matrix, degree by
    /// degree, low degree first.
    pub fn to_factored(&self, g: &KrMat) -> Result<Factored, Error> {
        let x = g.coeff(0);
        let x_inv = x.inv(&self.f).ok_or(Error::Singular)?;
        let mut v = KrMat::from_const(&x_inv, self.r).mul(g);
        let mut xs = Vec::with_capacity(self.r - 1);
        for k in 1..self.r {
            let xk = v.coeff(k);
            v = self.exp_eps(k, &xk.neg()).mul(&v);
            xs.push(xk);
        }
        debug_assert_eq!(v, KrMat::identity(self.n, self.r, self.p));
        Ok(Factored { x, xs })
    }

    fn assign_two(&self, xs: &[FpMat], ys: &[FpMat]) -> impl Fn(Sym) -> FpMat + '_ {
        let xs = xs.to_vec();
        let ys = ys.to_vec();
        let n = self.n;
        let p = self.p;
        move |s: Sym| {
            let k = (s.idx - 1) as usize;
            match s.kind {
                SymKind::X => xs.get(k).copied().unwrap_or_else(|| FpMat::zero(n, p)),
                SymKind::Y => ys.get(k).copied().unwrap_or_else(|| FpMat::zero(n, p)),
                SymKind::XPrime => FpMat::zero(n, p),
            }
        }
    }

    /// Product in factored coordinates via the z-polynomials.
    pub fn mul_factored(&self, a: &Factored, b: &Factored) -> Factored {
        let y_inv = b.x.inv(&self.f).expect("group element");
        let xs_conj: Vec<FpMat> = a.xs.iter().map(|m| m.conj_by(&y_inv, &b.x)).collect();
        let assign = self.assign_two(&xs_conj, &b.xs);
        let zs = self
            .z_polys
            .iter()
            .map(|zp| zp.eval(self.n, &self.f, &assign))
            .collect();
        Factored { x: a.x.mul(&b.x), xs: zs }
    }

    /// Conjugation a b a^{-1} in factored coordinates via the u-polynomials.
    pub fn conj_factored(&self, a: &Factored, b: &Factored) -> Factored {
        let f = &self.f;
        let y_inv = b.x.inv(f).expect("group element");
        let xs_conj: Vec<FpMat> = a.xs.iter().map(|m| m.conj_by(&y_inv, &b.x)).collect();
        let a_inv = a.x.inv(f).expect("group element");
        let n = self.n;
        let p = self.p;
        let xprimes = xs_conj.clone();
        let ys = b.xs.clone();
        let xs = a.xs.clone();
        let assign = move |s: Sym| {
            let k = (s.idx - 1) as usize;
            match s.kind {
                SymKind::XPrime => xprimes.get(k).copied().unwrap_or_else(|| FpMat::zero(n, p)),
                SymKind::Y => ys.get(k).copied().unwrap_or_else(|| FpMat::zero(n, p)),
                SymKind::X => xs.get(k).copied().unwrap_or_else(|| FpMat::zero(n, p)),
            }
        };
        let us: Vec<FpMat> = self
            .u_polys
            .iter()
            .map(|up| up.eval(self.n, &self.f, &assign).conj_by(&a.x, &a_inv))
            .collect();
        Factored { x: a.x.mul(&b.x).mul(&a_inv), xs: us }
    }

    /// Diagonal part of an upper triangular element; errors off B_r.
    pub fn d_r(&self, b: &KrMat) -> Result<KrMat, Error> {
        if !b.in_borel() {
            return Err(Error::NotInSubgroup("d_r applied outside the Borel subgroup".into()));
        }
        let mut out = KrMat::zero(self.n, self.r, self.p);
        for k in 0..self.r {
            for i in 0..self.n {
                out.set(k, i, i, b.get(k, i, i));
            }
        }
        Ok(out)
    }

    pub fn index_space(&self) -> u128 {
        (self.p as u128).pow((self.r * self.n * self.n) as u32)
    }

    pub fn card(&self, sub: Subgroup) -> u128 {
        let p = self.p as u128;
        let n = self.n as u32;
        let r = self.r as u32;
        match sub {
            Subgroup::Gr => {
                let mut gl = 1u128;
                for k in 0..n {
                    gl *= p.pow(n) - p.pow(k);
                }
                gl * p.pow((r - 1) * n * n)
            }
            Subgroup::Br => {
                let b1 = (p - 1).pow(n) * p.pow(n * (n - 1) / 2);
                b1 * p.pow((r - 1) * n * (n + 1) / 2)
            }
            Subgroup::Tr => (p - 1).pow(n) * p.pow((r - 1) * n),
            Subgroup::Ur => p.pow(r * n * (n - 1) / 2),
        }
    }

    /// Enumerates a subgroup by increasing canonical index. Refuses when the
    /// ambient index space exceeds the budget, reporting the required size.
    pub fn enumerate(&self, sub: Subgroup, force: bool) -> Result<Vec<u64>, Error> {
        let space = self.index_space();
        if space > ENUM_BUDGET && !force {
            return Err(Error::Budget { required: space, limit: ENUM_BUDGET });
        }
        let mut out = Vec::new();
        for idx in 0..space as u64 {
            let m = KrMat::from_index(self.n, self.r, self.p, idx);
            let keep = match sub {
                Subgroup::Gr => m.is_invertible(&self.f),
                Subgroup::Br => m.in_borel(),
                Subgroup::Tr => m.in_torus(),
                Subgroup::Ur => m.in_unipotent(),
            };
            if keep {
                out.push(idx);
            }
        }
        Ok(out)
    }

    /// All elements of the diagonal torus T(F_p).
    pub fn torus_elements(&self) -> Vec<FpMat> {
        let (n, p) = (self.n, self.p);
        let count = (p - 1).pow(n as u32);
        let mut out = Vec::with_capacity(count as usize);
        for code in 0..count {
            let mut c = code;
            let mut diag = vec![0u64; n];
            for d in diag.iter_mut() {
                *d = 1 + c % (p - 1);
                c /= p - 1;
            }
            out.push(FpMat::diag(p, &diag));
        }
        out
    }

    /// Least-index representatives of the right cosets T(F_p) \ G(F_p).
    pub fn torus_coset_reps(&self) -> Vec<FpMat> {
        let (n, p) = (self.n, self.p);
        let space = p.pow((n * n) as u32);
        let torus = self.torus_elements();
        let mut marked = vec![false; space as usize];
        let mut reps = Vec::new();
        for idx in 0..space {
            if marked[idx as usize] {
                continue;
            }
            let m = decode_fp(n, p, idx);
            if !m.is_invertible(&self.f) {
                continue;
            }
            for t in &torus {
                marked[encode_fp(&t.mul(&m)) as usize] = true;
            }
            reps.push(m);
        }
        reps
    }

    /// Least-index representatives of the right cosets B_r \ G_r; costs one
    /// pass over the whole group, so it is budget-guarded.
    pub fn borel_coset_reps(&self, force: bool) -> Result<Vec<u64>, Error> {
        let space = self.index_space();
        if space > ENUM_BUDGET && !force {
            return Err(Error::Budget { required: space, limit: ENUM_BUDGET });
        }
        let borel = self.enumerate(Subgroup::Br, force)?;
        let borel_mats: Vec<KrMat> = borel
            .iter()
            .map(|&i| KrMat::from_index(self.n, self.r, self.p, i))
            .collect();
        let mut marked = vec![false; space as usize];
        let mut reps = Vec::new();
        for idx in 0..space as u64 {
            if marked[idx as usize] {
                continue;
            }
            let g = KrMat::from_index(self.n, self.r, self.p, idx);
            if !g.is_invertible(&self.f) {
                continue;
            }
            for b in &borel_mats {
                marked[b.mul(&g).index() as usize] = true;
            }
            reps.push(idx);
        }
        Ok(reps)
    }
}

pub fn decode_fp(n: usize, p: u64, mut idx: u64) -> FpMat {
    let mut m = FpMat::zero(n, p);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, idx % p);
            idx /= p;
        }
    }
    m
}

pub fn encode_fp(m: &FpMat) -> u64 {
    let n = m.dim();
    let mut idx = 0u64;
    for i in (0..n).rev() {
        for j in (0..n).rev() {
            idx = idx * m.p + m.get(i, j);
        }
    }
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subgroup {
    Gr,
    Br,
    Tr,
    Ur,
}

/// dim H for H = ker(B_r -> T): r (dim G + dim T)/2 - dim T.
pub fn dim_h(r: u64, dim_g: u64, dim_t: u64) -> u64 {
    assert!(r * (dim_g + dim_t) % 2 == 0);
    r * (dim_g + dim_t) / 2 - dim_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::SplitMix64;

    fn rand_factored(rng: &mut SplitMix64, ctx: &GroupCtx) -> Factored {
        let x = loop {
            let mut m = FpMat::zero(ctx.n, ctx.p);
            for i in 0..ctx.n {
                for j in 0..ctx.n {
                    m.set(i, j, rng.fp(ctx.p));
                }
            }
            if m.is_invertible(&ctx.f) {
                break m;
            }
        };
        let xs = (1..ctx.r)
            .map(|_| {
                let mut m = FpMat::zero(ctx.n, ctx.p);
                for i in 0..ctx.n {
                    for j in 0..ctx.n {
                        m.set(i, j, rng.fp(ctx.p));
                    }
                }
                m
            })
            .collect();
        Factored { x, xs }
    }

    #[test]
    fn kr_arithmetic() {
        let ctx = GroupCtx::new(2, 5, 4).unwrap();
        let mut rng = SplitMix64::new(31);
        let id = KrMat::identity(2, 4, 5);
        for _ in 0..1000 {
            let g = ctx.from_factored(&rand_factored(&mut rng, &ctx));
            assert_eq!(id.mul(&g), g);
            let gi = g.inv(&ctx.f).unwrap();
            assert_eq!(g.mul(&gi), id);
            assert_eq!(gi.mul(&g), id);
        }
        let mut sing = KrMat::zero(2, 4, 5);
        sing.set(1, 0, 0, 1); // zero constant term
        assert!(sing.inv(&ctx.f).is_err());
    }

    #[test]
    fn exp_eps_expansion() {
        let ctx = GroupCtx::new(2, 5, 4).unwrap();
        let zero = FpMat::zero(2, 5);
        assert_eq!(ctx.exp_eps(1, &zero), KrMat::identity(2, 4, 5));
        let x = FpMat::from_rows(5, &[&[1, 2], &[3, 4]]);
        let e = ctx.exp_eps(1, &x);
        let e_neg = ctx.exp_eps(1, &x.neg());
        assert_eq!(e.mul(&e_neg), KrMat::identity(2, 4, 5));
        // 1 + eX + e^2 X^2/2 + e^3 X^3/6
        assert_eq!(e.coeff(0), FpMat::identity(2, 5));
        assert_eq!(e.coeff(1), x);
        let half = ctx.f.inv(2);
        let sixth = ctx.f.inv(6 % 5);
        assert_eq!(e.coeff(2), x.mul(&x).scale(half));
        assert_eq!(e.coeff(3), x.mul(&x).mul(&x).scale(sixth));
        // exp at degree m = 2 only has even coefficients
        let e2 = ctx.exp_eps(2, &x);
        assert_eq!(e2.coeff(1), zero);
        assert_eq!(e2.coeff(2), x);
        assert_eq!(e2.coeff(3), zero);
    }

    #[test]
    fn factored_roundtrip_exhaustive_small() {
        let ctx = GroupCtx::new(2, 3, 2).unwrap();
        let ids = ctx.enumerate(Subgroup::Gr, false).unwrap();
        assert_eq!(ids.len(), 3888);
        for &idx in &ids {
            let g = KrMat::from_index(2, 2, 3, idx);
            let fac = ctx.to_factored(&g).unwrap();
            assert_eq!(ctx.from_factored(&fac), g);
            assert_eq!(g.index(), idx);
        }
        // identity and pure-constant cases
        let id = KrMat::identity(2, 2, 3);
        let fac = ctx.to_factored(&id).unwrap();
        assert_eq!(fac.x, FpMat::identity(2, 3));
        assert!(fac.xs.iter().all(|m| *m == FpMat::zero(2, 3)));
    }

    #[test]
    fn bch_product_matches_matrix_oracle() {
        let ctx = GroupCtx::new(2, 5, 4).unwrap();
        let mut rng = SplitMix64::new(37);
        for _ in 0..1000 {
            let a = rand_factored(&mut rng, &ctx);
            let b = rand_factored(&mut rng, &ctx);
            let prod = ctx.mul_factored(&a, &b);
            let oracle = ctx.from_factored(&a).mul(&ctx.from_factored(&b));
            assert_eq!(ctx.from_factored(&prod), oracle);
        }
        // identity edge case
        let a = rand_factored(&mut rng, &ctx);
        let e = Factored { x: FpMat::identity(2, 5), xs: vec![FpMat::zero(2, 5); 3] };
        assert_eq!(ctx.mul_factored(&a, &e), a);
    }

    #[test]
    fn bch_conjugation_matches_matrix_oracle() {
        let ctx = GroupCtx::new(3, 7, 3).unwrap();
        let mut rng = SplitMix64::new(41);
        for _ in 0..1000 {
            let a = rand_factored(&mut rng, &ctx);
            let b = rand_factored(&mut rng, &ctx);
            let conj = ctx.conj_factored(&a, &b);
            let ga = ctx.from_factored(&a);
            let oracle = ga.mul(&ctx.from_factored(&b)).mul(&ga.inv(&ctx.f).unwrap());
            assert_eq!(ctx.from_factored(&conj), oracle);
        }
        let a = rand_factored(&mut rng, &ctx);
        let e = Factored { x: FpMat::identity(3, 7), xs: vec![FpMat::zero(3, 7); 2] };
        assert_eq!(ctx.conj_factored(&a, &e), e);
    }

    #[test]
    fn d_r_homomorphism() {
        let ctx = GroupCtx::new(2, 3, 2).unwrap();
        let borel = ctx.enumerate(Subgroup::Br, false).unwrap();
        assert_eq!(borel.len(), 324);
        let mut rng = SplitMix64::new(43);
        for _ in 0..1000 {
            let b1 = KrMat::from_index(2, 2, 3, borel[rng.below(borel.len() as u64) as usize]);
            let b2 = KrMat::from_index(2, 2, 3, borel[rng.below(borel.len() as u64) as usize]);
            let lhs = ctx.d_r(&b1.mul(&b2)).unwrap();
            let rhs = ctx.d_r(&b1).unwrap().mul(&ctx.d_r(&b2).unwrap());
            assert_eq!(lhs, rhs);
        }
        // diagonal fixed, unipotent kernel
        for &idx in &ctx.enumerate(Subgroup::Tr, false).unwrap() {
            let t = KrMat::from_index(2, 2, 3, idx);
            assert_eq!(ctx.d_r(&t).unwrap(), t);
        }
        for &idx in &ctx.enumerate(Subgroup::Ur, false).unwrap() {
            let u = KrMat::from_index(2, 2, 3, idx);
            assert_eq!(ctx.d_r(&u).unwrap(), KrMat::identity(2, 2, 3));
        }
        let g = KrMat::from_index(2, 2, 3, 3888 % 6561);
        if !g.in_borel() {
            assert!(ctx.d_r(&g).is_err());
        }
    }

    #[test]
    fn cardinalities() {
        let ctx = GroupCtx::new(2, 3, 2).unwrap();
        assert_eq!(ctx.card(Subgroup::Gr), 48 * 81);
        assert_eq!(ctx.card(Subgroup::Br), 12 * 27);
        assert_eq!(ctx.enumerate(Subgroup::Tr, false).unwrap().len() as u128, ctx.card(Subgroup::Tr));
        assert_eq!(ctx.enumerate(Subgroup::Ur, false).unwrap().len() as u128, ctx.card(Subgroup::Ur));
        let ctx3 = GroupCtx::new(2, 3, 3).unwrap();
        assert_eq!(ctx3.card(Subgroup::Tr), 4 * 81); // (p-1)^n p^(n(r-1))
        // budget refusal carries the required cardinality
        let big = GroupCtx::new(2, 5, 4).unwrap();
        match big.enumerate(Subgroup::Gr, false) {
            Err(Error::Budget { required, .. }) => assert_eq!(required, 5u128.pow(16)),
            other => panic!("expected budget refusal, got {other:?}"),
        }
    }

    #[test]
    fn dim_h_formula_and_count() {
        assert_eq!(dim_h(2, 4, 2), 4);
        assert_eq!(dim_h(3, 4, 2), 7);
        assert_eq!(dim_h(4, 4, 2), 10);
        // p^dim_H equals the number of Borel elements whose diagonal part is
        // a lift of the identity of T (n=2, p=3, r=2)
        let ctx = GroupCtx::new(2, 3, 2).unwrap();
        let count = ctx
            .enumerate(Subgroup::Br, false)
            .unwrap()
            .iter()
            .filter(|&&idx| {
                let b = KrMat::from_index(2, 2, 3, idx);
                let d = ctx.d_r(&b).unwrap();
                (0..2).all(|i| d.get(0, i, i) == 1)
            })
            .count();
        assert_eq!(count as u128, 3u128.pow(4));
    }

    #[test]
    fn torus_cosets() {
        let ctx = GroupCtx::new(2, 3, 1).unwrap();
        let reps = ctx.torus_coset_reps();
        assert_eq!(reps.len(), 12); // 48 / 4
        let ctx5 = GroupCtx::new(2, 5, 1).unwrap();
        assert_eq!(ctx5.torus_coset_reps().len(), 30); // 480 / 16
    }

    #[test]
    fn borel_cosets_small() {
        let ctx = GroupCtx::new(2, 3, 2).unwrap();
        let reps = ctx.borel_coset_reps(false).unwrap();
        assert_eq!(reps.len(), 12); // [G_2 : B_2] = 3888 / 324
        let ctx3 = GroupCtx::new(2, 3, 3).unwrap();
        assert_eq!(ctx3.borel_coset_reps(false).unwrap().len(), 36);
    }
}
