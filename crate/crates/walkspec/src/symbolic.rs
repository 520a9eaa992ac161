//! Symbolic Laplace-method coefficients.
//!
//! The expansion coefficients `A_l` of `L(s)` are polynomials with rational
//! coefficients in the normalized moments `rho_n = J_n J_2^{-n/2}`, `n >= 3`.
//! They are produced by mechanically expanding
//!
//! ```text
//! exp( sum_{n=3}^{2m+2} rho_n / n! * u^n * z^{n-2} )   (z = s^{-1/2})
//! ```
//!
//! to order `z^{2m}`, integrating even powers of `u` against the Gaussian
//! (`u^j` contributes `(j-1)!!`), and attaching the sign `(-1)^{j/2}` that
//! the imaginary unit in `(iu)^j` produces.  Only terms with `j` and `k`
//! both even survive.

use crate::real::{Ctx, Real};
use crate::walk::Rational;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SymbolicError {
    #[error("expansion order {0} too large (max 12)")]
    OrderTooLarge(u32),
}

/// Sparse polynomial in the formal variables `rho_3, rho_4, ...` with
/// rational coefficients.  The monomial key lists the exponent of
/// `rho_{i+3}` at position `i`, with trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentPoly {
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl MomentPoly {
    pub fn zero() -> Self {
        MomentPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        MomentPoly { terms }
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    /// The variable `rho_n`, `n >= 3`.
    pub fn var(n: u32) -> Self {
        assert!(n >= 3);
        let mut key = vec![0u32; (n - 3) as usize + 1];
        *key.last_mut().unwrap() = 1;
        let mut terms = BTreeMap::new();
        terms.insert(key, Rational::one());
        MomentPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.terms.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn insert(&mut self, key: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
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

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert(k.clone(), v.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        MomentPoly {
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let mut key = vec![0u32; ka.len().max(kb.len())];
                for (i, slot) in key.iter_mut().enumerate() {
                    *slot = ka.get(i).copied().unwrap_or(0) + kb.get(i).copied().unwrap_or(0);
                }
                while key.last() == Some(&0) {
                    key.pop();
                }
                out.insert(key, va * vb);
            }
        }
        out
    }

    /// Weight of a monomial: `sum (n - 2) * deg(rho_n)`.
    fn monomial_weight(key: &[u32]) -> u32 {
        key.iter()
            .enumerate()
            .map(|(i, &d)| (i as u32 + 1) * d)
            .sum()
    }

    /// If every monomial has the same weight, returns it.
    pub fn uniform_weight(&self) -> Option<u32> {
        let mut w = None;
        for key in self.terms.keys() {
            let mw = Self::monomial_weight(key);
            match w {
                None => w = Some(mw),
                Some(prev) if prev != mw => return None,
                _ => {}
            }
        }
        w
    }

    /// Largest `n` with `rho_n` appearing.
    pub fn max_moment(&self) -> Option<u32> {
        self.terms
            .keys()
            .filter_map(|k| k.iter().rposition(|&d| d > 0).map(|i| i as u32 + 3))
            .max()
    }

    /// Evaluates at real values `rho[i]` standing for `rho_{i+3}`.
    pub fn eval_real(&self, ctx: &Ctx, rho: &[Real]) -> Real {
        let mut acc = ctx.zero();
        for (key, c) in &self.terms {
            let mut term = ctx.from_rational(c);
            for (i, &d) in key.iter().enumerate() {
                if d > 0 {
                    term = ctx.mul(&term, &ctx.powi(&rho[i], d as i64));
                }
            }
            acc = ctx.add(&acc, &term);
        }
        acc
    }

    /// Exact evaluation at rational values (meaningful when `J_2` is a
    /// perfect square so the `rho_n` are rational).
    pub fn eval_rational(&self, rho: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (key, c) in &self.terms {
            let mut term = c.clone();
            for (i, &d) in key.iter().enumerate() {
                for _ in 0..d {
                    term *= &rho[i];
                }
            }
            acc += term;
        }
        acc
    }
}

/// `(j-1)!!` for even `j >= 0` (so 1, 1, 3, 15, ... at j = 0, 2, 4, 6).
fn odd_double_factorial(j: u32) -> BigInt {
    let mut acc = BigInt::one();
    let mut i = 1u32;
    while i < j {
        acc *= BigInt::from(i);
        i += 2;
    }
    acc
}

fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

/// Bivariate truncated polynomial in `(u, z)` with [`MomentPoly`]
/// coefficients; `z`-degree capped at `kmax`.
struct UzPoly {
    terms: BTreeMap<(u32, u32), MomentPoly>,
    kmax: u32,
}

impl UzPoly {
    fn zero(kmax: u32) -> Self {
        UzPoly {
            terms: BTreeMap::new(),
            kmax,
        }
    }

    fn one(kmax: u32) -> Self {
        let mut p = Self::zero(kmax);
        p.terms.insert((0, 0), MomentPoly::one());
        p
    }

    fn insert(&mut self, j: u32, k: u32, p: MomentPoly) {
        if k > self.kmax || p.is_zero() {
            return;
        }
        let e = self.terms.entry((j, k)).or_insert_with(MomentPoly::zero);
        *e = e.add(&p);
        if e.is_zero() {
            self.terms.remove(&(j, k));
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.kmax);
        for (&(ja, ka), pa) in &self.terms {
            for (&(jb, kb), pb) in &other.terms {
                if ka + kb > self.kmax {
                    continue;
                }
                out.insert(ja + jb, ka + kb, pa.mul(pb));
            }
        }
        out
    }
}

/// The coefficients `A_0 .. A_m` as exact polynomials in `rho_3 ..
/// rho_{2m+2}`; `A_0 = 1` and every monomial of `A_l` has weight `2l`.
pub fn symbolic_a(m: u32) -> Result<Vec<MomentPoly>, SymbolicError> {
    if m > 12 {
        return Err(SymbolicError::OrderTooLarge(m));
    }
    let kmax = 2 * m;
    // B = sum_{n=3}^{2m+2} rho_n / n! u^n z^{n-2}
    let mut b = UzPoly::zero(kmax);
    for n in 3..=(2 * m + 2) {
        let c = Rational::new(BigInt::one(), factorial(n));
        b.insert(n, n - 2, MomentPoly::var(n).scale(&c));
    }
    // E = sum_r B^r / r!  (B has z-degree >= 1, so r <= 2m suffices)
    let mut e = UzPoly::one(kmax);
    let mut bpow = UzPoly::one(kmax);
    let mut rfact = BigInt::one();
    for r in 1..=(2 * m) {
        bpow = bpow.mul(&b);
        rfact *= BigInt::from(r);
        let inv = Rational::new(BigInt::one(), rfact.clone());
        for (&(j, k), p) in &bpow.terms {
            e.insert(j, k, p.scale(&inv));
        }
    }
    // A_l = sum over even j of coeff(j, 2l) * (-1)^{j/2} * (j-1)!!
    let mut out = Vec::with_capacity(m as usize + 1);
    for l in 0..=m {
        let mut a = MomentPoly::zero();
        for (&(j, k), p) in &e.terms {
            if k != 2 * l || j % 2 != 0 {
                continue;
            }
            let mut c = Rational::from(odd_double_factorial(j));
            if (j / 2) % 2 == 1 {
                c = -c;
            }
            a = a.add(&p.scale(&c));
        }
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::rat;

    #[test]
    fn double_factorials() {
        assert_eq!(odd_double_factorial(0), BigInt::one());
        assert_eq!(odd_double_factorial(2), BigInt::one());
        assert_eq!(odd_double_factorial(4), BigInt::from(3));
        assert_eq!(odd_double_factorial(6), BigInt::from(15));
        assert_eq!(odd_double_factorial(8), BigInt::from(105));
        assert_eq!(odd_double_factorial(12), BigInt::from(10395));
    }

    #[test]
    fn a0_is_one() {
        let a = symbolic_a(0).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0], MomentPoly::one());
    }

    #[test]
    fn a1_closed_form() {
        // A_1 = rho_4 / 8 - 5 rho_3^2 / 24
        let a = symbolic_a(1).unwrap();
        let expect = MomentPoly::var(4).scale(&rat(1, 8)).add(
            &MomentPoly::var(3)
                .mul(&MomentPoly::var(3))
                .scale(&rat(-5, 24)),
        );
        assert_eq!(a[1], expect);
    }

    #[test]
    fn a2_closed_form() {
        // A_2 = -rho_6/48 + 7 rho_3 rho_5/48 + 35 rho_4^2/384
        //       - 35 rho_3^2 rho_4/64 + 385 rho_3^4/1152
        let a = symbolic_a(2).unwrap();
        let r3 = MomentPoly::var(3);
        let r4 = MomentPoly::var(4);
        let r5 = MomentPoly::var(5);
        let r6 = MomentPoly::var(6);
        let expect = r6
            .scale(&rat(-1, 48))
            .add(&r3.mul(&r5).scale(&rat(7, 48)))
            .add(&r4.mul(&r4).scale(&rat(35, 384)))
            .add(&r3.mul(&r3).mul(&r4).scale(&rat(-35, 64)))
            .add(&r3.mul(&r3).mul(&r3).mul(&r3).scale(&rat(385, 1152)));
        assert_eq!(a[2], expect);
    }

    #[test]
    fn weight_grading() {
        let a = symbolic_a(4).unwrap();
        for (l, poly) in a.iter().enumerate() {
            assert_eq!(poly.uniform_weight(), Some(2 * l as u32), "A_{l} weight");
            if l > 0 {
                assert!(poly.max_moment().unwrap() <= 2 * l as u32 + 2);
            }
        }
    }

    #[test]
    fn symmetric_shapes_use_even_moments_only() {
        // With rho_odd = 0, A_l evaluations stay finite and use only even
        // variables; check A_1, A_2 at the simple walk (all rho_even = 1).
        let a = symbolic_a(2).unwrap();
        let rho = vec![rat(0, 1), rat(1, 1), rat(0, 1), rat(1, 1)];
        assert_eq!(a[1].eval_rational(&rho), rat(1, 8));
        assert_eq!(a[2].eval_rational(&rho), rat(9, 128));
    }

    #[test]
    fn lazy_walk_values() {
        // J_2 = 1/2, J_4 = 1/2, J_6 = 1/2: rho_4 = 2, rho_6 = 4.
        let a = symbolic_a(2).unwrap();
        let rho = vec![rat(0, 1), rat(2, 1), rat(0, 1), rat(4, 1)];
        assert_eq!(a[1].eval_rational(&rho), rat(1, 4));
        assert_eq!(a[2].eval_rational(&rho), rat(9, 32));
    }

    #[test]
    fn order_guard() {
        assert_eq!(
            symbolic_a(13).unwrap_err(),
            SymbolicError::OrderTooLarge(13)
        );
    }
}
