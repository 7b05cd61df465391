//! Dense exact linear algebra over F_p: small square matrices (n <= 3) and
//! generic row reduction for kernels, solving and subspace membership.

use crate::fp::FieldCtx;

pub const MAX_N: usize = 3;

/// Square matrix over F_p, n <= 3, stored inline so it is `Copy`.
#[derive(Debug, Copy, Clone, PartialEq, Eq, Hash)]
pub struct FpMat {
    pub n: u8,
    pub p: u64,
    a: [u64; MAX_N * MAX_N],
}

impl FpMat {
    pub fn zero(n: usize, p: u64) -> FpMat {
        assert!(n >= 1 && n <= MAX_N);
        FpMat { n: n as u8, p, a: [0; MAX_N * MAX_N] }
    }

    pub fn identity(n: usize, p: u64) -> FpMat {
        let mut m = FpMat::zero(n, p);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(p: u64, rows: &[&[i64]]) -> FpMat {
        let n = rows.len();
        let mut m = FpMat::zero(n, p);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n);
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v.rem_euclid(p as i64) as u64);
            }
        }
        m
    }

    pub fn diag(p: u64, entries: &[u64]) -> FpMat {
        let mut m = FpMat::zero(entries.len(), p);
        for (i, &v) in entries.iter().enumerate() {
            m.set(i, i, v % p);
        }
        m
    }

    /// Elementary matrix unit E_ij.
    pub fn unit(n: usize, p: u64, i: usize, j: usize) -> FpMat {
        let mut m = FpMat::zero(n, p);
        m.set(i, j, 1);
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.a[i * MAX_N + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.a[i * MAX_N + j] = v % self.p;
    }

    pub fn add(&self, o: &FpMat) -> FpMat {
        self.zip(o, |p, a, b| (a + b) % p)
    }

    pub fn sub(&self, o: &FpMat) -> FpMat {
        self.zip(o, |p, a, b| (a + p - b) % p)
    }

    fn zip(&self, o: &FpMat, f: impl Fn(u64, u64, u64) -> u64) -> FpMat {
        assert_eq!(self.n, o.n);
        assert_eq!(self.p, o.p);
        let mut out = *self;
        for k in 0..MAX_N * MAX_N {
            out.a[k] = f(self.p, self.a[k], o.a[k]);
        }
        out
    }

    pub fn neg(&self) -> FpMat {
        let mut out = *self;
        for v in out.a.iter_mut() {
            *v = (self.p - *v) % self.p;
        }
        out
    }

    pub fn scale(&self, c: u64) -> FpMat {
        let c = c % self.p;
        let mut out = *self;
        for v in out.a.iter_mut() {
            *v = *v * c % self.p;
        }
        out
    }

    pub fn mul(&self, o: &FpMat) -> FpMat {
        assert_eq!(self.n, o.n);
        let n = self.dim();
        let mut out = FpMat::zero(n, self.p);
        for i in 0..n {
            for k in 0..n {
                let x = self.get(i, k);
                if x == 0 {
                    continue;
                }
                for j in 0..n {
                    let v = (out.get(i, j) + x * o.get(k, j)) % self.p;
                    out.a[i * MAX_N + j] = v;
                }
            }
        }
        out
    }

    /// Lie bracket XY - YX.
    pub fn bracket(&self, o: &FpMat) -> FpMat {
        self.mul(o).sub(&o.mul(self))
    }

    /// Trace form <X, Y> = tr(XY).
    pub fn pair(&self, o: &FpMat) -> u64 {
        assert_eq!(self.n, o.n);
        let n = self.dim();
        let mut acc = 0u64;
        for i in 0..n {
            for j in 0..n {
                acc = (acc + self.get(i, j) * o.get(j, i)) % self.p;
            }
        }
        acc
    }

    pub fn trace(&self) -> u64 {
        let mut acc = 0u64;
        for i in 0..self.dim() {
            acc = (acc + self.get(i, i)) % self.p;
        }
        acc
    }

    pub fn det(&self, f: &FieldCtx) -> u64 {
        let n = self.dim();
        match n {
            1 => self.get(0, 0),
            2 => f.sub(f.mul(self.get(0, 0), self.get(1, 1)), f.mul(self.get(0, 1), self.get(1, 0))),
            3 => {
                let m = |i: usize, j: usize| self.get(i, j);
                let mut acc = f.mul(m(0, 0), f.sub(f.mul(m(1, 1), m(2, 2)), f.mul(m(1, 2), m(2, 1))));
                acc = f.sub(acc, f.mul(m(0, 1), f.sub(f.mul(m(1, 0), m(2, 2)), f.mul(m(1, 2), m(2, 0)))));
                f.add(acc, f.mul(m(0, 2), f.sub(f.mul(m(1, 0), m(2, 1)), f.mul(m(1, 1), m(2, 0)))))
            }
            _ => unreachable!(),
        }
    }

    pub fn is_invertible(&self, f: &FieldCtx) -> bool {
        self.det(f) != 0
    }

    /// Inverse by Gauss-Jordan; `None` if singular.
    pub fn inv(&self, f: &FieldCtx) -> Option<FpMat> {
        let n = self.dim();
        let p = self.p;
        let mut m = vec![vec![0u64; 2 * n]; n];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = self.get(i, j);
            }
            m[i][n + i] = 1;
        }
        for col in 0..n {
            let piv = (col..n).find(|&r| m[r][col] != 0)?;
            m.swap(col, piv);
            let inv = f.inv(m[col][col]);
            for v in m[col].iter_mut() {
                *v = *v * inv % p;
            }
            for r in 0..n {
                if r != col && m[r][col] != 0 {
                    let c = m[r][col];
                    for j in 0..2 * n {
                        let s = m[col][j] * c % p;
                        m[r][j] = (m[r][j] + p - s) % p;
                    }
                }
            }
        }
        let mut out = FpMat::zero(n, p);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, m[i][n + j]);
            }
        }
        Some(out)
    }

    /// Ad(g) X = g X g^{-1}, with the inverse supplied by the caller.
    pub fn conj_by(&self, g: &FpMat, g_inv: &FpMat) -> FpMat {
        g.mul(self).mul(g_inv)
    }

    /// Characteristic polynomial coefficients, low degree first, monic of
    /// degree n (computed by evaluation/interpolation-free direct formulas).
    pub fn char_poly(&self, f: &FieldCtx) -> Vec<u64> {
        let n = self.dim();
        match n {
            1 => vec![f.neg(self.get(0, 0)), 1],
            2 => {
                let tr = self.trace();
                let det = self.det(f);
                vec![det, f.neg(tr), 1]
            }
            3 => {
                let tr = self.trace();
                let det = self.det(f);
                // sum of principal 2x2 minors
                let mut m2 = 0u64;
                for i in 0..3 {
                    for j in (i + 1)..3 {
                        let minor = f.sub(
                            f.mul(self.get(i, i), self.get(j, j)),
                            f.mul(self.get(i, j), self.get(j, i)),
                        );
                        m2 = f.add(m2, minor);
                    }
                }
                vec![f.neg(det), m2, f.neg(tr), 1]
            }
            _ => unreachable!(),
        }
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.get(i, j) == 0))
    }

    pub fn is_upper_triangular(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..i).all(|j| self.get(i, j) == 0))
    }

    pub fn diagonal(&self) -> Vec<u64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Diagonal part as a matrix.
    pub fn diag_part(&self) -> FpMat {
        let mut out = FpMat::zero(self.dim(), self.p);
        for i in 0..self.dim() {
            out.set(i, i, self.get(i, i));
        }
        out
    }

    /// Flatten row-major into a vector of length n^2.
    pub fn flatten(&self) -> Vec<u64> {
        let n = self.dim();
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                v.push(self.get(i, j));
            }
        }
        v
    }

    pub fn from_flat(n: usize, p: u64, v: &[u64]) -> FpMat {
        assert_eq!(v.len(), n * n);
        let mut m = FpMat::zero(n, p);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, v[i * n + j]);
            }
        }
        m
    }
}

/// Reduced row echelon form in place; returns pivot column indices.
pub fn rref(rows: &mut Vec<Vec<u64>>, p: u64, f: &FieldCtx) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(pr) = (r..rows.len()).find(|&i| rows[i][c] % p != 0) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = f.inv(rows[r][c]);
        for v in rows[r].iter_mut() {
            *v = *v * inv % p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] % p != 0 {
                let m = rows[i][c] % p;
                for j in 0..ncols {
                    let s = rows[r][j] * m % p;
                    rows[i][j] = (rows[i][j] + p - s) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    pivots
}

/// A subspace of F_p^m, stored as an rref basis for canonical membership
/// tests and coset representatives.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub m: usize,
    pub p: u64,
    pub basis: Vec<Vec<u64>>,
    pub pivots: Vec<usize>,
}

impl Subspace {
    pub fn from_vectors(m: usize, p: u64, f: &FieldCtx, vecs: &[Vec<u64>]) -> Subspace {
        let mut rows: Vec<Vec<u64>> = vecs.iter().map(|v| v.iter().map(|&x| x % p).collect()).collect();
        let pivots = rref(&mut rows, p, f);
        Subspace { m, p, basis: rows, pivots }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Canonical representative of `v` modulo this subspace: subtract the
    /// pivot components.
    pub fn reduce(&self, f: &FieldCtx, v: &[u64]) -> Vec<u64> {
        let p = self.p;
        let mut out: Vec<u64> = v.iter().map(|&x| x % p).collect();
        for (row, &c) in self.basis.iter().zip(&self.pivots) {
            let coef = out[c];
            if coef != 0 {
                for j in 0..self.m {
                    let s = row[j] * coef % p;
                    out[j] = (out[j] + p - s) % p;
                }
            }
        }
        let _ = f;
        out
    }

    pub fn contains(&self, f: &FieldCtx, v: &[u64]) -> bool {
        self.reduce(f, v).iter().all(|&x| x == 0)
    }
}

/// Basis of the kernel of the linear map given by `rows` (each row is one
/// coordinate functional on F_p^m).
pub fn nullspace(rows: &[Vec<u64>], m: usize, p: u64, f: &FieldCtx) -> Vec<Vec<u64>> {
    let mut mat: Vec<Vec<u64>> = rows.to_vec();
    let pivots = rref(&mut mat, p, f);
    let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for free in 0..m {
        if pivot_set.contains(&free) {
            continue;
        }
        let mut v = vec![0u64; m];
        v[free] = 1;
        for (row, &c) in mat.iter().zip(&pivots) {
            v[c] = (p - row[free] % p) % p;
        }
        basis.push(v);
    }
    basis
}

/// One solution of `A x = b` where A's rows are `rows`; `None` if inconsistent.
pub fn solve(rows: &[Vec<u64>], b: &[u64], p: u64, f: &FieldCtx) -> Option<Vec<u64>> {
    assert_eq!(rows.len(), b.len());
    let m = rows.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<u64>> = rows
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut row: Vec<u64> = r.iter().map(|&x| x % p).collect();
            row.push(bi % p);
            row
        })
        .collect();
    let pivots = rref(&mut aug, p, f);
    if pivots.contains(&m) {
        return None; // pivot in the constant column
    }
    let mut x = vec![0u64; m];
    for (row, &c) in aug.iter().zip(&pivots) {
        x[c] = row[m];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::SplitMix64;

    fn rand_mat(rng: &mut SplitMix64, n: usize, p: u64) -> FpMat {
        let mut m = FpMat::zero(n, p);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, rng.fp(p));
            }
        }
        m
    }

    #[test]
    fn inverse_roundtrip() {
        let f = FieldCtx::new(5).unwrap();
        let mut rng = SplitMix64::new(2);
        let id = FpMat::identity(2, 5);
        let mut found = 0;
        while found < 500 {
            let m = rand_mat(&mut rng, 2, 5);
            if let Some(inv) = m.inv(&f) {
                assert_eq!(m.mul(&inv), id);
                assert_eq!(inv.mul(&m), id);
                found += 1;
            }
        }
    }

    #[test]
    fn det_matches_char_poly_constant() {
        let f = FieldCtx::new(7).unwrap();
        let mut rng = SplitMix64::new(3);
        for _ in 0..200 {
            let m = rand_mat(&mut rng, 3, 7);
            let cp = m.char_poly(&f);
            // char poly at 0 is det(0 - M) = (-1)^n det(M)
            let det = m.det(&f);
            assert_eq!(cp[0], f.neg(det));
            assert_eq!(cp[3], 1);
        }
    }

    #[test]
    fn nullspace_and_solve() {
        let f = FieldCtx::new(3).unwrap();
        // x + 2y = 0 over F_3 has a 1-dim kernel in F_3^2
        let rows = vec![vec![1u64, 2]];
        let ns = nullspace(&rows, 2, 3, &f);
        assert_eq!(ns.len(), 1);
        for v in &ns {
            assert_eq!((v[0] + 2 * v[1]) % 3, 0);
        }
        let sol = solve(&rows, &[1], 3, &f).unwrap();
        assert_eq!((sol[0] + 2 * sol[1]) % 3, 1);
        assert!(solve(&vec![vec![0u64, 0]], &[1], 3, &f).is_none());
    }

    #[test]
    fn subspace_membership() {
        let f = FieldCtx::new(3).unwrap();
        let sub = Subspace::from_vectors(3, 3, &f, &[vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(sub.dim(), 2);
        assert!(sub.contains(&f, &[1, 2, 1]));
        assert!(!sub.contains(&f, &[1, 0, 1]));
        // reduce is idempotent and lands in a complement
        let r = sub.reduce(&f, &[2, 2, 2]);
        assert_eq!(sub.reduce(&f, &r), r);
    }
}
