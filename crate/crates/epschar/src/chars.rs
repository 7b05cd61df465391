//! Additive and multiplicative characters of F_p with values in Z[zeta_N],
//! N = p(p-1), plus the affine-linear character-sum utility used by every
//! fiber computation.

use crate::cyc::{CycCtx, CycValue};
use crate::fp::FieldCtx;
use crate::Error;

/// Bundle of the prime-field and cyclotomic contexts for one configuration.
#[derive(Debug, Clone)]
pub struct Scalars {
    pub field: FieldCtx,
    pub cyc: CycCtx,
}

impl Scalars {
    pub fn new(p: u64) -> Result<Scalars, Error> {
        Ok(Scalars { field: FieldCtx::new(p)?, cyc: CycCtx::for_prime(p)? })
    }

    /// Root-of-unity index of psi(a): psi(a) = zeta_N^((N/p) * a).
    #[inline]
    pub fn psi_index(&self, a: u64) -> u64 {
        (self.cyc.n_root / self.field.p) * (a % self.field.p)
    }

    /// The fixed nontrivial additive character psi: F_p -> Z[zeta_N]^*.
    pub fn psi(&self, a: u64) -> CycValue {
        self.cyc.root(self.psi_index(a))
    }

    /// Root index of the multiplicative character with exponent vector
    /// `exponents` at an invertible diagonal `t`:
    /// zeta_(p-1)^(sum_i c_i dlog(t_i)) = zeta_N^(p * sum).
    pub fn lambda0_index(&self, exponents: &[i64], t_diag: &[u64]) -> u64 {
        assert_eq!(exponents.len(), t_diag.len());
        let p = self.field.p;
        let ord = p - 1;
        let mut e = 0u64;
        for (&c, &t) in exponents.iter().zip(t_diag) {
            assert!(t % p != 0, "multiplicative character at non-invertible element");
            let k = self.field.dlog(t);
            e = (e + c.rem_euclid(ord as i64) as u64 * k) % ord;
        }
        (p * e) % self.cyc.n_root
    }

    /// Character value lambda_0(t) for a diagonal `t` given by its entries.
    pub fn lambda0(&self, exponents: &[i64], t_diag: &[u64]) -> CycValue {
        self.cyc.root(self.lambda0_index(exponents, t_diag))
    }

    /// Order of the character cut out by `exponents` (divides p-1).
    pub fn lambda0_order(&self, exponents: &[i64]) -> u64 {
        let ord = self.field.p - 1;
        let mut g = ord;
        for &c in exponents {
            g = num_integer::gcd(g, c.rem_euclid(ord as i64) as u64);
        }
        ord / g
    }
}

/// An affine-linear map F_p^dim -> F_p given by coefficients and a constant.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub coeffs: Vec<u64>,
    pub constant: u64,
}

impl AffineMap {
    pub fn eval(&self, s: &Scalars, v: &[u64]) -> u64 {
        let f = &s.field;
        let mut acc = self.constant % f.p;
        for (&c, &x) in self.coeffs.iter().zip(v) {
            acc = f.add(acc, f.mul(c % f.p, x % f.p));
        }
        acc
    }

    pub fn is_constant(&self, p: u64) -> bool {
        self.coeffs.iter().all(|&c| c % p == 0)
    }
}

/// Closed form of `sum over v in F_p^dim of psi(l(v))`: zero when the linear
/// part is nontrivial, `p^dim * psi(constant)` when it is constant.
pub fn gauss_linear_sum(s: &Scalars, l: &AffineMap) -> CycValue {
    let p = s.field.p;
    if l.is_constant(p) {
        let size = p.checked_pow(l.coeffs.len() as u32).expect("fiber size overflow");
        s.cyc.scale(&s.psi(l.constant), i64::try_from(size).expect("fiber size overflow"))
    } else {
        s.cyc.zero()
    }
}

/// Brute-force evaluation of the same sum, for cross-checking.
pub fn gauss_linear_sum_brute(s: &Scalars, l: &AffineMap) -> CycValue {
    let p = s.field.p;
    let dim = l.coeffs.len();
    let total = p.pow(dim as u32);
    let mut acc = s.cyc.zero();
    let mut v = vec![0u64; dim];
    for it in 0..total {
        let mut t = it;
        for x in v.iter_mut() {
            *x = t % p;
            t /= p;
        }
        s.cyc.add_root_assign(&mut acc, s.psi_index(l.eval(s, &v)), 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::SplitMix64;

    #[test]
    fn psi_is_a_nontrivial_homomorphism() {
        let s = Scalars::new(3).unwrap();
        assert_eq!(s.psi(0), s.cyc.one());
        let mut nontrivial = false;
        for a in 0..3 {
            for b in 0..3 {
                let lhs = s.cyc.mul(&s.psi(a), &s.psi(b));
                assert_eq!(lhs, s.psi((a + b) % 3));
            }
            if s.psi(a) != s.cyc.one() {
                nontrivial = true;
            }
        }
        assert!(nontrivial);
    }

    #[test]
    fn psi_full_sum_vanishes() {
        for p in [3u64, 5, 7] {
            let s = Scalars::new(p).unwrap();
            let mut acc = s.cyc.zero();
            for a in 0..p {
                s.cyc.add_assign(&mut acc, &s.psi(a));
            }
            assert!(s.cyc.is_zero(&acc));
        }
    }

    #[test]
    fn lambda0_values_and_homomorphism() {
        let s = Scalars::new(3).unwrap();
        // n=1, c=(1): lambda_0(2) = zeta_2 = -1, since dlog(2) = 1 under gamma 2.
        let v = s.lambda0(&[1], &[2]);
        assert_eq!(v, s.cyc.neg(&s.cyc.one()));
        // constant character
        assert_eq!(s.lambda0(&[0, 0], &[2, 2]), s.cyc.one());
        // multiplicativity, sampled
        let mut rng = SplitMix64::new(3);
        let s5 = Scalars::new(5).unwrap();
        let exps = [1i64, 3];
        for _ in 0..200 {
            let t = [1 + rng.below(4), 1 + rng.below(4)];
            let u = [1 + rng.below(4), 1 + rng.below(4)];
            let tu = [t[0] * u[0] % 5, t[1] * u[1] % 5];
            let lhs = s5.cyc.mul(&s5.lambda0(&exps, &t), &s5.lambda0(&exps, &u));
            assert_eq!(lhs, s5.lambda0(&exps, &tu));
        }
        assert_eq!(s5.lambda0_order(&[1, 3]), 4);
        assert_eq!(s5.lambda0_order(&[2, 2]), 2);
        assert_eq!(s5.lambda0_order(&[0, 0]), 1);
    }

    #[test]
    fn gauss_sum_examples() {
        let s = Scalars::new(3).unwrap();
        // V = F_3, l(v) = v: nonconstant, so 0
        let l = AffineMap { coeffs: vec![1], constant: 0 };
        assert!(s.cyc.is_zero(&gauss_linear_sum(&s, &l)));
        // V = F_3^2, l = 1: constant, so 9 psi(1)
        let l = AffineMap { coeffs: vec![0, 0], constant: 1 };
        assert_eq!(gauss_linear_sum(&s, &l), s.cyc.scale(&s.psi(1), 9));
        // V = F_5^3, l(v) = v1 + 2 v2 + 3: brute force over 125 points gives 0
        let s5 = Scalars::new(5).unwrap();
        let l = AffineMap { coeffs: vec![1, 2, 0], constant: 3 };
        let brute = gauss_linear_sum_brute(&s5, &l);
        assert!(s5.cyc.is_zero(&brute));
        assert_eq!(gauss_linear_sum(&s5, &l), brute);
    }

    #[test]
    fn gauss_closed_form_matches_brute_force() {
        // 100 random affine maps over F_3^k, k <= 4
        let s = Scalars::new(3).unwrap();
        let mut rng = SplitMix64::new(11);
        for _ in 0..100 {
            let k = 1 + rng.below(4) as usize;
            let l = AffineMap {
                coeffs: (0..k).map(|_| rng.fp(3)).collect(),
                constant: rng.fp(3),
            };
            assert_eq!(gauss_linear_sum(&s, &l), gauss_linear_sum_brute(&s, &l));
        }
    }
}
