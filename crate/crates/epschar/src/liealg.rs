//! The Lie algebra gl_n(F_p) with its trace form: root data for the diagonal
//! torus, orthogonal complements, centralizers of split regular semisimple
//! elements with canonical conjugators, the three-part decomposition relative
//! to such an element, and the coset-valued bracket map attached to a
//! centralizing group element.

use crate::fp::FieldCtx;
use crate::linalg::{nullspace, solve, FpMat, Subspace};
use crate::Error;

/// Root datum of GL_n with respect to the diagonal torus: positive roots are
/// pairs (i, j) with i < j, alpha(A) = a_i - a_j, e^alpha(t) = t_i / t_j.
#[derive(Debug, Clone)]
pub struct RootDatum {
    pub n: usize,
    pub p: u64,
}

pub type Root = (usize, usize);

impl RootDatum {
    pub fn new(n: usize, p: u64) -> RootDatum {
        RootDatum { n, p }
    }

    pub fn positive_roots(&self) -> Vec<Root> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                out.push((i, j));
            }
        }
        out
    }

    /// alpha_(i,j) evaluated on a diagonal matrix.
    pub fn alpha(&self, f: &FieldCtx, root: Root, a: &FpMat) -> u64 {
        f.sub(a.get(root.0, root.0), a.get(root.1, root.1))
    }

    /// e^alpha_(i,j) evaluated on an invertible diagonal matrix.
    pub fn e_alpha(&self, f: &FieldCtx, root: Root, t: &FpMat) -> u64 {
        f.mul(t.get(root.0, root.0), f.inv(t.get(root.1, root.1)))
    }

    /// dim G = n^2.
    pub fn dim_g(&self) -> u64 {
        (self.n * self.n) as u64
    }

    /// dim T = n.
    pub fn dim_t(&self) -> u64 {
        self.n as u64
    }

    pub fn torus_subalg(&self, f: &FieldCtx) -> Subspace {
        let vecs: Vec<Vec<u64>> = (0..self.n)
            .map(|i| FpMat::unit(self.n, self.p, i, i).flatten())
            .collect();
        Subspace::from_vectors(self.n * self.n, self.p, f, &vecs)
    }

    pub fn borel_subalg(&self, f: &FieldCtx) -> Subspace {
        let mut vecs = Vec::new();
        for i in 0..self.n {
            for j in i..self.n {
                vecs.push(FpMat::unit(self.n, self.p, i, j).flatten());
            }
        }
        Subspace::from_vectors(self.n * self.n, self.p, f, &vecs)
    }

    pub fn nilradical_subalg(&self, f: &FieldCtx) -> Subspace {
        let mut vecs = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                vecs.push(FpMat::unit(self.n, self.p, i, j).flatten());
            }
        }
        Subspace::from_vectors(self.n * self.n, self.p, f, &vecs)
    }
}

/// Bracket and trace-form pairing in one call.
pub fn bracket_form(x: &FpMat, y: &FpMat) -> (FpMat, u64) {
    (x.bracket(y), x.pair(y))
}

/// Orthogonal complement with respect to the trace form.
pub fn perp(f: &FieldCtx, e: &Subspace) -> Subspace {
    let n2 = e.m;
    let n = (n2 as f64).sqrt() as usize;
    assert_eq!(n * n, n2);
    // <X, B> = sum_ij X[i][j] B[j][i]: the functional row for B is B transposed.
    let rows: Vec<Vec<u64>> = e
        .basis
        .iter()
        .map(|b| {
            let m = FpMat::from_flat(n, e.p, b);
            let mut row = vec![0u64; n2];
            for i in 0..n {
                for j in 0..n {
                    row[i * n + j] = m.get(j, i);
                }
            }
            row
        })
        .collect();
    let ker = nullspace(&rows, n2, e.p, f);
    Subspace::from_vectors(n2, e.p, f, &ker)
}

/// Centralizer data of a split regular semisimple element.
#[derive(Debug, Clone)]
pub struct Centralizer {
    /// Lie centralizer of R in gl_n (dimension n).
    pub t_r: Subspace,
    /// Canonical conjugator: x R x^{-1} equals the configured diagonal target.
    pub x: FpMat,
    pub x_inv: FpMat,
}

/// Matrix of ad(R) acting on flattened gl_n.
fn ad_matrix(r: &FpMat) -> Vec<Vec<u64>> {
    let n = r.dim();
    let mut rows = vec![vec![0u64; n * n]; n * n];
    for a in 0..n {
        for b in 0..n {
            let e = FpMat::unit(n, r.p, a, b);
            let br = e.bracket(r); // [E, R]
            for i in 0..n {
                for j in 0..n {
                    rows[i * n + j][a * n + b] = br.get(i, j);
                }
            }
        }
    }
    rows
}

/// Computes the centralizer of `r` together with the canonical conjugator
/// onto the diagonal `target` (which must be regular and have the same
/// characteristic polynomial as `r`).
pub fn centralizer(f: &FieldCtx, r: &FpMat, target: &FpMat) -> Result<Centralizer, Error> {
    let n = r.dim();
    assert!(target.is_diagonal());
    let tdiag = target.diagonal();
    for i in 0..n {
        for j in (i + 1)..n {
            if tdiag[i] == tdiag[j] {
                return Err(Error::NotRegular(format!(
                    "target entries {},{} collide: {}",
                    i, j, tdiag[i]
                )));
            }
        }
    }
    if r.char_poly(f) != target.char_poly(f) {
        return Err(Error::NotRegular(
            "characteristic polynomial differs from the diagonal target (element is outside the orbit)".into(),
        ));
    }
    // eigenvector for each target entry, canonically normalized
    let mut x_inv = FpMat::zero(n, f.p);
    for (col, &d) in tdiag.iter().enumerate() {
        let shifted = r.sub(&FpMat::identity(n, f.p).scale(d));
        let rows: Vec<Vec<u64>> = (0..n)
            .map(|i| (0..n).map(|j| shifted.get(i, j)).collect())
            .collect();
        let ker = nullspace(&rows, n, f.p, f);
        if ker.len() != 1 {
            return Err(Error::NotRegular(format!(
                "eigenvalue {d} has eigenspace of dimension {}",
                ker.len()
            )));
        }
        let mut v = ker[0].clone();
        let lead = v.iter().copied().find(|&c| c != 0).unwrap();
        let scale = f.inv(lead);
        for c in v.iter_mut() {
            *c = f.mul(*c, scale);
        }
        for row in 0..n {
            x_inv.set(row, col, v[row]);
        }
    }
    let x = x_inv.inv(f).ok_or(Error::Singular)?;
    let t_r_basis = nullspace(&ad_matrix(r), n * n, f.p, f);
    let t_r = Subspace::from_vectors(n * n, f.p, f, &t_r_basis);
    debug_assert_eq!(t_r.dim(), n);
    debug_assert_eq!(r.conj_by(&x, &x_inv), *target);
    Ok(Centralizer { t_r, x, x_inv })
}

/// The coset-valued map attached to (R, z): send xi = [X, R] to
/// [X, Ad(z) xi] modulo the orthogonal complement of the centralizer of R.
/// Returns the canonical coset representative (flattened).
pub fn xi_map(
    f: &FieldCtx,
    r: &FpMat,
    t_r_perp: &Subspace,
    z: &FpMat,
    xi: &FpMat,
) -> Result<Vec<u64>, Error> {
    let n = r.dim();
    let rows = ad_matrix(r);
    let x_flat = solve(&rows, &xi.flatten(), f.p, f)
        .ok_or_else(|| Error::Unsolvable("xi is not in the image of ad(R)".into()))?;
    let x = FpMat::from_flat(n, f.p, &x_flat);
    let z_inv = z.inv(f).ok_or(Error::Singular)?;
    let z_xi = xi.conj_by(z, &z_inv);
    let out = x.bracket(&z_xi);
    Ok(t_r_perp.reduce(f, &out.flatten()))
}

/// Decomposition g = g^-_R + t_R + g^+_R relative to the canonical
/// conjugator of a regular semisimple element.
pub fn pm0_decompose(f: &FieldCtx, cent: &Centralizer, x_mat: &FpMat) -> (FpMat, FpMat, FpMat) {
    let n = x_mat.dim();
    let framed = x_mat.conj_by(&cent.x, &cent.x_inv);
    let mut minus = FpMat::zero(n, f.p);
    let mut zero = FpMat::zero(n, f.p);
    let mut plus = FpMat::zero(n, f.p);
    for i in 0..n {
        for j in 0..n {
            let v = framed.get(i, j);
            if i == j {
                zero.set(i, j, v);
            } else if i < j {
                plus.set(i, j, v);
            } else {
                minus.set(i, j, v);
            }
        }
    }
    (
        minus.conj_by(&cent.x_inv, &cent.x),
        zero.conj_by(&cent.x_inv, &cent.x),
        plus.conj_by(&cent.x_inv, &cent.x),
    )
}

/// Positive roots where 1 + e^alpha(y) = 0, for an invertible diagonal y.
pub fn xi_y(f: &FieldCtx, rd: &RootDatum, y: &FpMat) -> Vec<Root> {
    assert!(y.is_diagonal());
    rd.positive_roots()
        .into_iter()
        .filter(|&root| f.add(1, rd.e_alpha(f, root, y)) == 0)
        .collect()
}

/// Splits X into its diagonal part and its root components X[i][j] E_ij.
pub fn root_components(x: &FpMat) -> (FpMat, Vec<(Root, u64)>) {
    let n = x.dim();
    let mut comps = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && x.get(i, j) != 0 {
                comps.push(((i, j), x.get(i, j)));
            }
        }
    }
    (x.diag_part(), comps)
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

    fn rand_invertible(rng: &mut SplitMix64, f: &FieldCtx, n: usize) -> FpMat {
        loop {
            let m = rand_mat(rng, n, f.p);
            if m.is_invertible(f) {
                return m;
            }
        }
    }

    #[test]
    fn bracket_and_pairing_basics() {
        let e12 = FpMat::unit(2, 5, 0, 1);
        let e21 = FpMat::unit(2, 5, 1, 0);
        let (br, pair) = bracket_form(&e12, &e21);
        assert_eq!(br, FpMat::from_rows(5, &[&[1, 0], &[0, -1]]));
        assert_eq!(pair, 1);
    }

    #[test]
    fn form_invariance_sampled() {
        let f = FieldCtx::new(7).unwrap();
        let mut rng = SplitMix64::new(5);
        for _ in 0..1000 {
            let x = rand_mat(&mut rng, 3, 7);
            let y = rand_mat(&mut rng, 3, 7);
            let z = rand_mat(&mut rng, 3, 7);
            // <[X,Y],Z> = <X,[Y,Z]>, equivalently <[X,Y],Z> + <Y,[X,Z]> = 0
            let lhs = x.bracket(&y).pair(&z);
            let rhs = y.pair(&x.bracket(&z));
            assert_eq!(f.add(lhs, rhs), 0);
        }
    }

    #[test]
    fn gram_matrix_is_permutation() {
        // pairing of matrix units: <E_ab, E_cd> = [b == c][a == d]
        let n = 3;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let lhs = FpMat::unit(n, 5, a, b).pair(&FpMat::unit(n, 5, c, d));
                        let expect = u64::from(b == c && a == d);
                        assert_eq!(lhs, expect);
                    }
                }
            }
        }
    }

    #[test]
    fn perp_of_standard_subalgebras() {
        let f = FieldCtx::new(3).unwrap();
        let rd = RootDatum::new(2, 3);
        let nil = rd.nilradical_subalg(&f);
        let bor = rd.borel_subalg(&f);
        let tor = rd.torus_subalg(&f);
        // perp(n) = b
        let pn = perp(&f, &nil);
        assert_eq!(pn.basis, bor.basis);
        // perp(t) = off-diagonal span
        let pt = perp(&f, &tor);
        assert_eq!(pt.dim(), 2);
        assert!(pt.contains(&f, &FpMat::unit(2, 3, 0, 1).flatten()));
        assert!(pt.contains(&f, &FpMat::unit(2, 3, 1, 0).flatten()));
        // perp(gl_n) = 0, perp(perp(E)) = E
        let full_vecs: Vec<Vec<u64>> = (0..4).map(|k| FpMat::unit(2, 3, k / 2, k % 2).flatten()).collect();
        let full = Subspace::from_vectors(4, 3, &f, &full_vecs);
        assert_eq!(perp(&f, &full).dim(), 0);
        assert_eq!(perp(&f, &pn).basis, nil.basis);
        assert_eq!(nil.dim() + pn.dim(), 4);
    }

    #[test]
    fn centralizer_diagonal_case() {
        let f = FieldCtx::new(5).unwrap();
        let r = FpMat::diag(5, &[1, 2]);
        let cent = centralizer(&f, &r, &r).unwrap();
        assert_eq!(cent.x, FpMat::identity(2, 5));
        assert_eq!(cent.t_r.dim(), 2);
        assert!(cent.t_r.contains(&f, &FpMat::diag(5, &[3, 4]).flatten()));
        assert!(!cent.t_r.contains(&f, &FpMat::unit(2, 5, 0, 1).flatten()));
    }

    #[test]
    fn centralizer_dimension_random_regular() {
        let f = FieldCtx::new(7).unwrap();
        let mut rng = SplitMix64::new(9);
        let target = FpMat::diag(7, &[1, 2, 4]);
        for _ in 0..100 {
            let g = rand_invertible(&mut rng, &f, 3);
            let g_inv = g.inv(&f).unwrap();
            let r = target.conj_by(&g_inv, &g);
            let cent = centralizer(&f, &r, &target).unwrap();
            assert_eq!(cent.t_r.dim(), 3);
            assert_eq!(r.conj_by(&cent.x, &cent.x_inv), target);
        }
    }

    #[test]
    fn centralizer_rejects_irreducible() {
        // char poly x^2 + 1 is irreducible over F_3
        let f = FieldCtx::new(3).unwrap();
        let r = FpMat::from_rows(3, &[&[0, 2], &[1, 0]]);
        let target = FpMat::diag(3, &[1, 2]);
        assert!(centralizer(&f, &r, &target).is_err());
        // repeated eigenvalues rejected via the target
        let bad_target = FpMat::diag(3, &[1, 1]);
        assert!(centralizer(&f, &FpMat::diag(3, &[1, 1]), &bad_target).is_err());
    }

    #[test]
    fn ad_image_and_kernel_exhaustive() {
        // over F_3, n = 2: for every regular split R, ad(R) has kernel t_R
        // and image perp(t_R)
        let f = FieldCtx::new(3).unwrap();
        let target = FpMat::diag(3, &[0, 1]);
        let mut tested = 0;
        for code in 0..81u64 {
            let mut m = FpMat::zero(2, 3);
            let mut c = code;
            for i in 0..2 {
                for j in 0..2 {
                    m.set(i, j, c % 3);
                    c /= 3;
                }
            }
            // regular split with the target's spectrum
            if m.char_poly(&f) != target.char_poly(&f) {
                continue;
            }
            tested += 1;
            let cent = centralizer(&f, &m, &target).unwrap();
            let rows = ad_matrix(&m);
            let ker = nullspace(&rows, 4, 3, &f);
            assert_eq!(ker.len(), 2);
            for v in &ker {
                assert!(cent.t_r.contains(&f, v));
            }
            let t_r_perp = perp(&f, &cent.t_r);
            // image = span of [E_ab, R] over the unit matrices
            let image_vecs: Vec<Vec<u64>> = (0..4)
                .map(|k| FpMat::unit(2, 3, k / 2, k % 2).bracket(&m).flatten())
                .collect();
            let image = Subspace::from_vectors(4, 3, &f, &image_vecs);
            assert_eq!(image.dim(), 2);
            assert_eq!(image.basis, t_r_perp.basis);
        }
        assert!(tested > 0);
    }

    #[test]
    fn xi_map_well_defined_and_linear() {
        let f = FieldCtx::new(5).unwrap();
        let mut rng = SplitMix64::new(13);
        let target = FpMat::diag(5, &[1, 3]);
        for _ in 0..1000 {
            let g = rand_invertible(&mut rng, &f, 2);
            let g_inv = g.inv(&f).unwrap();
            let r = target.conj_by(&g_inv, &g);
            let cent = centralizer(&f, &r, &target).unwrap();
            let t_r_perp = perp(&f, &cent.t_r);
            // z in the centralizer of R inside G: conjugate a diagonal back
            let z = FpMat::diag(5, &[1 + rng.below(4), 1 + rng.below(4)]).conj_by(&cent.x_inv, &cent.x);
            // xi = [X, R] for random X
            let x0 = rand_mat(&mut rng, 2, 5);
            let xi = x0.bracket(&r);
            let v1 = xi_map(&f, &r, &t_r_perp, &z, &xi).unwrap();
            // adding a centralizer element to the solution leaves the coset unchanged
            {
                let rho = FpMat::from_flat(2, 5, &cent.t_r.basis[rng.below(2) as usize]);
                let x_alt = x0.add(&rho);
                let xi_alt = x_alt.bracket(&r);
                assert_eq!(xi_alt, xi);
                let z_inv = z.inv(&f).unwrap();
                let direct = x_alt.bracket(&xi.conj_by(&z, &z_inv));
                assert_eq!(t_r_perp.reduce(&f, &direct.flatten()), v1);
            }
            // zero maps to zero
            assert!(xi_map(&f, &r, &t_r_perp, &z, &FpMat::zero(2, 5)).unwrap().iter().all(|&c| c == 0));
            // the map is quadratic in xi: even, and scaling xi by c scales the
            // value by c^2 (solving [X, R] = c xi rescales X by c as well)
            let a = xi_map(&f, &r, &t_r_perp, &z, &xi).unwrap();
            assert_eq!(xi_map(&f, &r, &t_r_perp, &z, &xi.neg()).unwrap(), a);
            let c = 1 + rng.below(4);
            let scaled = xi_map(&f, &r, &t_r_perp, &z, &xi.scale(c)).unwrap();
            let expect: Vec<u64> = a.iter().map(|&v| f.mul(v, f.mul(c, c))).collect();
            assert_eq!(scaled, t_r_perp.reduce(&f, &expect));
        }
        // xi outside the image of ad(R) errors
        let r = FpMat::diag(5, &[1, 3]);
        let cent = centralizer(&f, &r, &r).unwrap();
        let t_r_perp = perp(&f, &cent.t_r);
        let bad_xi = FpMat::diag(5, &[1, 0]);
        assert!(xi_map(&f, &r, &t_r_perp, &FpMat::identity(2, 5), &bad_xi).is_err());
    }

    #[test]
    fn pm0_decomposition() {
        let f = FieldCtx::new(5).unwrap();
        let target = FpMat::diag(5, &[4, 2]);
        let mut rng = SplitMix64::new(17);
        // X in t_R decomposes as (0, X, 0)
        let g = rand_invertible(&mut rng, &f, 2);
        let g_inv = g.inv(&f).unwrap();
        let r = target.conj_by(&g_inv, &g);
        let cent = centralizer(&f, &r, &target).unwrap();
        let x_in = FpMat::diag(5, &[2, 3]).conj_by(&cent.x_inv, &cent.x);
        let (m, z, pl) = pm0_decompose(&f, &cent, &x_in);
        assert_eq!(m, FpMat::zero(2, 5));
        assert_eq!(z, x_in);
        assert_eq!(pl, FpMat::zero(2, 5));
        // identity conjugator: E_12 is purely a positive-root vector
        let cent_id = centralizer(&f, &target, &target).unwrap();
        let e12 = FpMat::unit(2, 5, 0, 1);
        let (m2, z2, p2) = pm0_decompose(&f, &cent_id, &e12);
        assert_eq!((m2, z2, p2), (FpMat::zero(2, 5), FpMat::zero(2, 5), e12));
        // reassembly and stability under x -> tx
        for _ in 0..200 {
            let g = rand_invertible(&mut rng, &f, 2);
            let g_inv = g.inv(&f).unwrap();
            let r = target.conj_by(&g_inv, &g);
            let cent = centralizer(&f, &r, &target).unwrap();
            let xm = rand_mat(&mut rng, 2, 5);
            let (a, b, c) = pm0_decompose(&f, &cent, &xm);
            assert_eq!(a.add(&b).add(&c), xm);
            let t = FpMat::diag(5, &[1 + rng.below(4), 1 + rng.below(4)]);
            let tx = t.mul(&cent.x);
            let tx_inv = tx.inv(&f).unwrap();
            let mod_cent = Centralizer { t_r: cent.t_r.clone(), x: tx, x_inv: tx_inv };
            let (a2, b2, c2) = pm0_decompose(&f, &mod_cent, &xm);
            assert_eq!((a, b, c), (a2, b2, c2));
        }
    }

    #[test]
    fn xi_y_examples() {
        let f = FieldCtx::new(3).unwrap();
        let rd = RootDatum::new(2, 3);
        assert!(xi_y(&f, &rd, &FpMat::identity(2, 3)).is_empty());
        // y = diag(1, 2): e^alpha(y) = 1 * inv(2) = 2 = -1 mod 3
        let y = FpMat::diag(3, &[1, 2]);
        assert_eq!(xi_y(&f, &rd, &y), vec![(0, 1)]);
        for c in 1..3 {
            assert!(xi_y(&f, &rd, &FpMat::diag(3, &[c, c])).is_empty());
        }
    }

    #[test]
    fn root_components_and_ad_scaling() {
        let f = FieldCtx::new(7).unwrap();
        let rd = RootDatum::new(3, 7);
        let mut rng = SplitMix64::new(21);
        let diag = FpMat::diag(7, &[1, 2, 3]);
        assert!(root_components(&diag).1.is_empty());
        let two = FpMat::unit(2, 7, 0, 1).add(&FpMat::unit(2, 7, 1, 0));
        assert_eq!(root_components(&two).1.len(), 2);
        for _ in 0..1000 {
            let x = rand_mat(&mut rng, 3, 7);
            let y = FpMat::diag(7, &[1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6)]);
            let y_inv = y.inv(&f).unwrap();
            let (x0, comps) = root_components(&x);
            // reassembly
            let mut acc = x0;
            for (&(i, j), &v) in comps.iter().map(|(r, v)| (r, v)) {
                acc = acc.add(&FpMat::unit(3, 7, i, j).scale(v));
            }
            assert_eq!(acc, x);
            // Ad(y^{-1}) X has components e^alpha(y^{-1}) X^alpha
            let conj = x.conj_by(&y_inv, &y);
            for ((i, j), v) in comps {
                let scale = f.mul(y_inv.get(i, i), f.inv(y_inv.get(j, j)));
                assert_eq!(conj.get(i, j), f.mul(scale, v));
            }
            let _ = &rd;
        }
    }

    #[test]
    fn transported_datum_pairing_invariant() {
        // <Ad(x^-1) A, Ad(y^-1) X - X> = 0 whenever x y x^-1 is diagonal
        let f = FieldCtx::new(5).unwrap();
        let mut rng = SplitMix64::new(23);
        let a = FpMat::diag(5, &[1, 2]);
        for _ in 0..10_000 {
            let x = rand_invertible(&mut rng, &f, 2);
            let x_inv = x.inv(&f).unwrap();
            let t = FpMat::diag(5, &[1 + rng.below(4), 1 + rng.below(4)]);
            let y = t.conj_by(&x_inv, &x);
            let y_inv = y.inv(&f).unwrap();
            let xm = rand_mat(&mut rng, 2, 5);
            let a_x = a.conj_by(&x_inv, &x);
            let diff = xm.conj_by(&y_inv, &y).sub(&xm);
            assert_eq!(a_x.pair(&diff), 0);
        }
    }
}
