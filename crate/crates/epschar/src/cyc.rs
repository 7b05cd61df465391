//! Exact arithmetic in Z[zeta_N], represented as Z[x]/(Phi_N(x)).
//!
//! N is always p(p-1), so one ring holds the additive character values
//! (order p), the multiplicative character values (order dividing p-1) and
//! every sum built from them. Coefficients are `i64` and all operations are
//! overflow-checked; exceeding the envelope is a hard error rather than a
//! silent wrap.

use crate::Error;

/// Cyclotomic polynomial Phi_n as an integer coefficient vector, low degree
/// first, monic.
pub fn cyclotomic_poly(n: u64) -> Vec<i64> {
    // x^n - 1 divided by the product of Phi_d over proper divisors d of n.
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n % d == 0 {
            let phi_d = cyclotomic_poly(d);
            num = poly_div_exact(&num, &phi_d);
        }
    }
    num
}

/// Exact division of integer polynomials; panics if not exact (callers only
/// divide known multiples).
fn poly_div_exact(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut rem: Vec<i64> = a.to_vec();
    let db = b.len() - 1;
    assert_eq!(b[db], 1, "divisor must be monic");
    let da = rem.len() - 1;
    assert!(da >= db);
    let mut quot = vec![0i64; da - db + 1];
    for k in (0..=(da - db)).rev() {
        let c = rem[k + db];
        quot[k] = c;
        if c != 0 {
            for (i, &bc) in b.iter().enumerate() {
                rem[k + i] -= c * bc;
            }
        }
    }
    assert!(rem.iter().all(|&c| c == 0), "inexact polynomial division");
    quot
}

/// Ring context for Z[zeta_N] = Z[x]/(Phi_N).
#[derive(Debug, Clone)]
pub struct CycCtx {
    pub n_root: u64,
    /// Coefficients of Phi_N, low degree first, monic.
    pub phi: Vec<i64>,
    pub deg: usize,
    /// `red[m]` = coefficients of zeta^m reduced mod Phi_N, for m in 0..N.
    red: Vec<Vec<i64>>,
}

/// Element of Z[zeta_N] in the power basis 1, zeta, ..., zeta^(deg-1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycValue {
    pub c: Vec<i64>,
}

fn checked_add(a: i64, b: i64) -> i64 {
    a.checked_add(b).expect("cyclotomic coefficient overflow")
}

impl CycCtx {
    pub fn new(n_root: u64) -> Result<CycCtx, Error> {
        if n_root < 1 {
            return Err(Error::Config("cyclotomic order must be positive".into()));
        }
        let phi = cyclotomic_poly(n_root);
        let deg = phi.len() - 1;
        let mut red: Vec<Vec<i64>> = Vec::with_capacity(n_root as usize);
        let mut cur = vec![0i64; deg];
        if deg > 0 {
            cur[0] = 1;
        }
        for _ in 0..n_root {
            red.push(cur.clone());
            // multiply by x, reduce by the monic Phi_N
            let mut next = vec![0i64; deg + 1];
            next[1..=deg].copy_from_slice(&cur);
            if next[deg] != 0 {
                let lead = next[deg];
                for i in 0..=deg {
                    next[i] -= lead * phi[i];
                }
            }
            cur = next[..deg].to_vec();
        }
        Ok(CycCtx { n_root, phi, deg, red })
    }

    /// Smallest ring containing both a p-th and a (p-1)-th root of unity.
    pub fn for_prime(p: u64) -> Result<CycCtx, Error> {
        CycCtx::new(p * (p - 1))
    }

    pub fn zero(&self) -> CycValue {
        CycValue { c: vec![0; self.deg] }
    }

    pub fn one(&self) -> CycValue {
        self.root(0)
    }

    pub fn from_int(&self, k: i64) -> CycValue {
        let mut v = self.zero();
        if self.deg > 0 {
            v.c[0] = k;
        }
        v
    }

    /// zeta_N^k, reduced.
    pub fn root(&self, k: u64) -> CycValue {
        CycValue { c: self.red[(k % self.n_root) as usize].clone() }
    }

    pub fn is_zero(&self, v: &CycValue) -> bool {
        v.c.iter().all(|&x| x == 0)
    }

    pub fn add(&self, a: &CycValue, b: &CycValue) -> CycValue {
        let c = a.c.iter().zip(&b.c).map(|(&x, &y)| checked_add(x, y)).collect();
        CycValue { c }
    }

    pub fn add_assign(&self, a: &mut CycValue, b: &CycValue) {
        for (x, &y) in a.c.iter_mut().zip(&b.c) {
            *x = checked_add(*x, y);
        }
    }

    /// `acc += m * zeta^k`, the hot path of every exponential sum.
    pub fn add_root_assign(&self, acc: &mut CycValue, k: u64, m: i64) {
        let row = &self.red[(k % self.n_root) as usize];
        for (x, &r) in acc.c.iter_mut().zip(row) {
            *x = checked_add(*x, r.checked_mul(m).expect("cyclotomic coefficient overflow"));
        }
    }

    /// `v * zeta^k` via the reduction table.
    pub fn mul_root(&self, v: &CycValue, k: u64) -> CycValue {
        let mut out = self.zero();
        for (c, &x) in v.c.iter().enumerate() {
            if x != 0 {
                self.add_root_assign(&mut out, k + c as u64, x);
            }
        }
        out
    }

    pub fn neg(&self, a: &CycValue) -> CycValue {
        CycValue { c: a.c.iter().map(|&x| -x).collect() }
    }

    pub fn sub(&self, a: &CycValue, b: &CycValue) -> CycValue {
        self.add(a, &self.neg(b))
    }

    pub fn scale(&self, a: &CycValue, m: i64) -> CycValue {
        CycValue {
            c: a.c
                .iter()
                .map(|&x| x.checked_mul(m).expect("cyclotomic coefficient overflow"))
                .collect(),
        }
    }

    pub fn mul(&self, a: &CycValue, b: &CycValue) -> CycValue {
        if self.deg == 0 {
            return self.zero();
        }
        let mut conv = vec![0i128; 2 * self.deg - 1];
        for (i, &x) in a.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.c.iter().enumerate() {
                conv[i + j] += x as i128 * y as i128;
            }
        }
        // long division by the monic Phi_N
        for k in (self.deg..conv.len()).rev() {
            let lead = conv[k];
            if lead != 0 {
                conv[k] = 0;
                for i in 0..self.deg {
                    conv[k - self.deg + i] -= lead * self.phi[i] as i128;
                }
            }
        }
        let c = conv[..self.deg]
            .iter()
            .map(|&x| i64::try_from(x).expect("cyclotomic coefficient overflow"))
            .collect();
        CycValue { c }
    }

    /// Ring involution zeta -> zeta^(N-1) = conjugation on root-of-unity sums.
    pub fn conj(&self, a: &CycValue) -> CycValue {
        let mut out = self.zero();
        for (c, &x) in a.c.iter().enumerate() {
            if x != 0 {
                let m = (self.n_root - c as u64) % self.n_root;
                self.add_root_assign(&mut out, m, x);
            }
        }
        out
    }

    /// Exact division by an integer; `None` if any coefficient is not divisible.
    pub fn div_exact_int(&self, a: &CycValue, d: i64) -> Option<CycValue> {
        assert!(d != 0);
        let mut c = Vec::with_capacity(self.deg);
        for &x in &a.c {
            if x % d != 0 {
                return None;
            }
            c.push(x / d);
        }
        Some(CycValue { c })
    }

    /// If `v` is a plain integer (all zeta-coefficients above the constant
    /// vanish), return it.
    pub fn as_int(&self, v: &CycValue) -> Option<i64> {
        if v.c[1..].iter().all(|&x| x == 0) {
            Some(v.c[0])
        } else {
            None
        }
    }

    /// Display as a polynomial in the root of unity.
    pub fn render(&self, v: &CycValue) -> String {
        if self.is_zero(v) {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, &x) in v.c.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let term = match k {
                0 => format!("{x}"),
                1 => format!("{x}*z"),
                _ => format!("{x}*z^{k}"),
            };
            parts.push(term);
        }
        format!("{} (z = zeta_{})", parts.join(" + "), self.n_root)
    }

    /// Float rendering for report emission only.
    pub fn approx(&self, v: &CycValue) -> (f64, f64) {
        let (mut re, mut im) = (0.0f64, 0.0f64);
        let step = 2.0 * std::f64::consts::PI / self.n_root as f64;
        for (k, &x) in v.c.iter().enumerate() {
            re += x as f64 * (step * k as f64).cos();
            im += x as f64 * (step * k as f64).sin();
        }
        (re, im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::SplitMix64;

    #[test]
    fn phi_small_orders() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(2), vec![1, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(20), vec![1, 0, -1, 0, 1, 0, -1, 0, 1]);
        // Phi_42 has degree phi(42) = 12.
        assert_eq!(cyclotomic_poly(42).len(), 13);
    }

    #[test]
    fn phi_divides_xn_minus_1() {
        for n in [6u64, 12, 20, 42] {
            let phi = cyclotomic_poly(n);
            let mut xn = vec![0i64; n as usize + 1];
            xn[0] = -1;
            xn[n as usize] = 1;
            let _ = poly_div_exact(&xn, &phi); // panics if not a divisor
        }
    }

    #[test]
    fn zeta6_squared() {
        // zeta_6^2 reduced mod x^2 - x + 1 is zeta_6 - 1.
        let ctx = CycCtx::new(6).unwrap();
        let z2 = ctx.root(2);
        assert_eq!(z2.c, vec![-1, 1]);
    }

    #[test]
    fn conj_is_inverse_on_roots() {
        let ctx = CycCtx::new(20).unwrap();
        for k in 0..20 {
            let z = ctx.root(k);
            let prod = ctx.mul(&ctx.conj(&z), &z);
            assert_eq!(prod, ctx.one());
            assert_eq!(ctx.conj(&ctx.conj(&z)), z);
        }
    }

    #[test]
    fn full_root_sum_vanishes() {
        // sum over a full coset of p-th roots of unity is zero
        let ctx = CycCtx::for_prime(3).unwrap();
        let mut acc = ctx.zero();
        for a in 0..3 {
            ctx.add_root_assign(&mut acc, 2 * a, 1); // zeta_6^(2a) runs over cube roots
        }
        assert!(ctx.is_zero(&acc));
    }

    #[test]
    fn ring_laws_sampled() {
        let ctx = CycCtx::new(20).unwrap();
        let mut rng = SplitMix64::new(7);
        let sample = |rng: &mut SplitMix64| {
            let mut v = ctx.zero();
            for c in v.c.iter_mut() {
                *c = rng.below(21) as i64 - 10;
            }
            v
        };
        for _ in 0..10_000 {
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let c = sample(&mut rng);
            let ab_c = ctx.mul(&ctx.mul(&a, &b), &c);
            let a_bc = ctx.mul(&a, &ctx.mul(&b, &c));
            assert_eq!(ab_c, a_bc);
            let lhs = ctx.mul(&a, &ctx.add(&b, &c));
            let rhs = ctx.add(&ctx.mul(&a, &b), &ctx.mul(&a, &c));
            assert_eq!(lhs, rhs);
            // conj is a ring involution
            assert_eq!(ctx.conj(&ctx.mul(&a, &b)), ctx.mul(&ctx.conj(&a), &ctx.conj(&b)));
            // mul_root shortcut agrees with full multiplication
            let k = rng.below(20);
            assert_eq!(ctx.mul_root(&a, k), ctx.mul(&a, &ctx.root(k)));
        }
    }

    #[test]
    fn exact_int_division() {
        let ctx = CycCtx::new(6).unwrap();
        let v = ctx.scale(&ctx.root(1), 12);
        assert_eq!(ctx.div_exact_int(&v, 4), Some(ctx.scale(&ctx.root(1), 3)));
        assert_eq!(ctx.div_exact_int(&v, 5), None);
    }
}
