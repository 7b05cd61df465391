//! Deterministic samplers shared by the verification suites. All randomness
//! flows from one seeded splitmix64 stream, so identical configurations
//! reproduce identical sample sets.

use crate::charfun::CharCtx;
use crate::fp::SplitMix64;
use crate::grgroup::Factored;
use crate::linalg::FpMat;

pub fn rand_mat(rng: &mut SplitMix64, n: usize, p: u64) -> FpMat {
    let mut m = FpMat::zero(n, p);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, rng.fp(p));
        }
    }
    m
}

pub fn rand_diag(rng: &mut SplitMix64, n: usize, p: u64) -> FpMat {
    FpMat::diag(p, &(0..n).map(|_| 1 + rng.below(p - 1)).collect::<Vec<_>>())
}

/// A base point with a conjugate in the diagonal torus: x^-1 t x.
pub fn rand_split_element(cc: &CharCtx, rng: &mut SplitMix64) -> FpMat {
    let x = cc.rand_invertible(rng);
    let x_inv = x.inv(&cc.g.f).unwrap();
    rand_diag(rng, cc.g.n, cc.g.p).conj_by(&x_inv, &x)
}

/// A base point with no conjugate in the torus (characteristic polynomial
/// irreducible or a nontrivial Jordan block), found by rejection.
pub fn rand_nonsplit_element(cc: &CharCtx, rng: &mut SplitMix64) -> FpMat {
    loop {
        let m = cc.rand_invertible(rng);
        let split = cc.torus_reps().iter().any(|x| {
            let x_inv = x.inv(&cc.g.f).unwrap();
            m.conj_by(x, &x_inv).is_diagonal()
        });
        if !split {
            return m;
        }
    }
}

/// A random element of G_r in factored coordinates.
pub fn rand_factored(cc: &CharCtx, rng: &mut SplitMix64) -> Factored {
    let x = cc.rand_invertible(rng);
    let xs = (1..cc.g.r).map(|_| rand_mat(rng, cc.g.n, cc.g.p)).collect();
    Factored { x, xs }
}

/// A random element whose base point is split, so ladder and fiber sums are
/// nonempty.
pub fn rand_factored_split(cc: &CharCtx, rng: &mut SplitMix64) -> Factored {
    let x = rand_split_element(cc, rng);
    let xs = (1..cc.g.r).map(|_| rand_mat(rng, cc.g.n, cc.g.p)).collect();
    Factored { x, xs }
}
