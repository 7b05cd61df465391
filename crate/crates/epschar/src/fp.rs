//! Arithmetic in the prime field F_p, with a fixed generator of F_p^* and a
//! discrete-log table.
//!
//! The modulus is a runtime parameter, so elements are plain `u64` residues in
//! `0..p` and all operations go through a [`FieldCtx`].

use crate::Error;

/// Context for a prime field F_p: modulus, least primitive root, dlog table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldCtx {
    pub p: u64,
    /// Least primitive root mod p.
    pub gamma: u64,
    /// `dlog[a] = k` with `gamma^k = a`, for `a` in `1..p`; `dlog[0]` unused.
    dlog: Vec<u32>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldCtx {
    /// Builds the field context. Rejects `p = 2` and composite `p`.
    pub fn new(p: u64) -> Result<FieldCtx, Error> {
        if p == 2 {
            return Err(Error::Config("p = 2 is not supported (p must be odd)".into()));
        }
        if !is_prime(p) {
            return Err(Error::Config(format!("p = {p} is not prime")));
        }
        let gamma = (2..p)
            .find(|&g| Self::is_primitive_root(g, p))
            .expect("odd prime has a primitive root >= 2");
        let mut dlog = vec![0u32; p as usize];
        let mut acc = 1u64;
        for k in 0..(p - 1) {
            dlog[acc as usize] = k as u32;
            acc = acc * gamma % p;
        }
        Ok(FieldCtx { p, gamma, dlog })
    }

    fn is_primitive_root(g: u64, p: u64) -> bool {
        let mut acc = 1u64;
        for _ in 0..(p - 2) {
            acc = acc * g % p;
            if acc == 1 {
                return false;
            }
        }
        true
    }

    #[inline]
    pub fn reduce_i64(&self, a: i64) -> u64 {
        a.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p { s - self.p } else { s }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b { a - b } else { a + self.p - b }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 { 0 } else { self.p - a }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `a` must be nonzero.
    pub fn inv(&self, a: u64) -> u64 {
        assert!(a % self.p != 0, "division by zero mod {}", self.p);
        self.pow(a % self.p, self.p - 2)
    }

    /// Discrete log base `gamma`; `a` must be nonzero.
    pub fn dlog(&self, a: u64) -> u64 {
        let a = a % self.p;
        assert!(a != 0, "dlog of zero");
        self.dlog[a as usize] as u64
    }
}

/// Deterministic splitmix64 stream, used everywhere sampling is needed.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform value in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        // Rejection sampling keeps the stream unbiased.
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % bound;
            }
        }
    }

    pub fn fp(&mut self, p: u64) -> u64 {
        self.below(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_primitive_roots() {
        // Brute-force oracle: gamma^k walks through all of F_p^* exactly once.
        for (p, expect) in [(3u64, 2u64), (5, 2), (7, 3), (11, 2), (13, 2)] {
            let ctx = FieldCtx::new(p).unwrap();
            assert_eq!(ctx.gamma, expect, "p = {p}");
            let mut seen = vec![false; p as usize];
            let mut acc = 1u64;
            for _ in 0..(p - 1) {
                assert!(!seen[acc as usize]);
                seen[acc as usize] = true;
                acc = acc * ctx.gamma % p;
            }
            assert_eq!(acc, 1);
        }
    }

    #[test]
    fn dlog_inverts_pow() {
        let ctx = FieldCtx::new(5).unwrap();
        assert_eq!(ctx.dlog(4), 2);
        for a in 1..5 {
            assert_eq!(ctx.pow(ctx.gamma, ctx.dlog(a)), a);
        }
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(FieldCtx::new(4).is_err());
        assert!(FieldCtx::new(2).is_err());
        assert!(FieldCtx::new(1).is_err());
    }

    #[test]
    fn field_laws_sampled() {
        let ctx = FieldCtx::new(7).unwrap();
        let mut rng = SplitMix64::new(1);
        for _ in 0..1000 {
            let a = rng.fp(7);
            let b = rng.fp(7);
            assert_eq!(ctx.add(a, ctx.neg(a)), 0);
            assert_eq!(ctx.sub(a, b), ctx.add(a, ctx.neg(b)));
            if a != 0 {
                assert_eq!(ctx.mul(a, ctx.inv(a)), 1);
            }
        }
    }
}
