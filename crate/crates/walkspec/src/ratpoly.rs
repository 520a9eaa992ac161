//! Exact univariate polynomial algebra over the rationals.
//!
//! Dense representation with ascending coefficients.  Provides the pieces the
//! rest of the crate needs: Euclidean division, gcd, Sturm sequences with
//! sign-variation root counting, bisection refinement of isolated real roots,
//! rational-root detection, resultants, and Lagrange interpolation.

use crate::real::{Ctx, Real};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatPoly {
    /// coeffs[i] multiplies x^i; the last entry is nonzero unless empty.
    coeffs: Vec<BigRational>,
}

impl RatPoly {
    pub fn zero() -> Self {
        RatPoly { coeffs: vec![] }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_coeffs(vec![c])
    }

    pub fn from_coeffs(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn x() -> Self {
        Self::from_coeffs(vec![BigRational::zero(), BigRational::one()])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> BigRational {
        self.coeffs
            .last()
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_real(&self, ctx: &Ctx, x: &Real) -> Real {
        let mut acc = ctx.zero();
        for c in self.coeffs.iter().rev() {
            acc = ctx.add(&ctx.mul(&acc, x), &ctx.from_rational(c));
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) + other.coeff(i));
        }
        Self::from_coeffs(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) - other.coeff(i));
        }
        Self::from_coeffs(out)
    }

    pub fn neg(&self) -> Self {
        RatPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RatPoly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::from_coeffs(out)
    }

    /// Euclidean division: `self = q * div + r` with `deg r < deg div`.
    pub fn divrem(&self, div: &Self) -> (Self, Self) {
        assert!(!div.is_zero(), "division by zero polynomial");
        let mut rem = self.coeffs.clone();
        let d = div.degree();
        if self.degree() < d || self.is_zero() {
            return (Self::zero(), self.clone());
        }
        let lead = div.leading();
        let mut q = vec![BigRational::zero(); self.degree() - d + 1];
        for i in (d..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let f = &rem[i] / &lead;
            q[i - d] = f.clone();
            for (j, c) in div.coeffs.iter().enumerate() {
                let t = c * &f;
                rem[i - d + j] -= t;
            }
        }
        (Self::from_coeffs(q), Self::from_coeffs(rem))
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &Self) -> Self {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.divrem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            return a;
        }
        let lead = a.leading();
        a.scale(&(BigRational::one() / lead))
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() - 1);
        for (i, c) in self.coeffs.iter().enumerate().skip(1) {
            out.push(c * BigRational::from(BigInt::from(i)));
        }
        Self::from_coeffs(out)
    }

    pub fn is_squarefree(&self) -> bool {
        if self.degree() <= 1 {
            return true;
        }
        self.gcd(&self.derivative()).degree() == 0
    }

    /// Sturm chain of the squarefree part.
    pub fn sturm_chain(&self) -> Vec<RatPoly> {
        let sf = {
            let g = self.gcd(&self.derivative());
            if g.degree() == 0 {
                self.clone()
            } else {
                self.divrem(&g).0
            }
        };
        let mut chain = vec![sf.clone(), sf.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let (_, r) = chain[n - 2].divrem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(r.neg());
        }
        chain
    }

    fn sign_variations(values: impl Iterator<Item = i8>) -> usize {
        let mut count = 0;
        let mut last = 0i8;
        for s in values {
            if s == 0 {
                continue;
            }
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
        count
    }

    fn sign_at(p: &RatPoly, x: &BigRational) -> i8 {
        let v = p.eval(x);
        if v.is_zero() {
            0
        } else if v.is_positive() {
            1
        } else {
            -1
        }
    }

    fn sign_at_pos_infinity(p: &RatPoly) -> i8 {
        if p.is_zero() {
            0
        } else if p.leading().is_positive() {
            1
        } else {
            -1
        }
    }

    /// Number of distinct real roots in the open interval `(lo, hi)`.
    pub fn count_roots_between(chain: &[RatPoly], lo: &BigRational, hi: &BigRational) -> usize {
        let va = Self::sign_variations(chain.iter().map(|p| Self::sign_at(p, lo)));
        let vb = Self::sign_variations(chain.iter().map(|p| Self::sign_at(p, hi)));
        va.saturating_sub(vb)
    }

    /// Number of distinct real roots in `(lo, +inf)`.
    pub fn count_roots_above(chain: &[RatPoly], lo: &BigRational) -> usize {
        let va = Self::sign_variations(chain.iter().map(|p| Self::sign_at(p, lo)));
        let vb = Self::sign_variations(chain.iter().map(Self::sign_at_pos_infinity));
        va.saturating_sub(vb)
    }

    /// Cauchy bound on the absolute value of any root.
    pub fn root_bound(&self) -> BigRational {
        let lead = self.leading().abs();
        let mut m = BigRational::zero();
        for c in &self.coeffs[..self.coeffs.len().saturating_sub(1)] {
            let v = c.abs() / &lead;
            if v > m {
                m = v;
            }
        }
        m + BigRational::one()
    }

    /// Isolates the distinct real roots in `(lo, hi)` into disjoint open
    /// intervals, each containing exactly one root.
    pub fn isolate_roots_in(
        &self,
        lo: &BigRational,
        hi: &BigRational,
    ) -> Vec<(BigRational, BigRational)> {
        let chain = self.sturm_chain();
        let sf = &chain[0];
        let mut out = Vec::new();
        // Work queue of intervals with a known root count.
        let mut queue = vec![(
            lo.clone(),
            hi.clone(),
            Self::count_roots_between(&chain, lo, hi),
        )];
        while let Some((a, b, n)) = queue.pop() {
            if n == 0 {
                continue;
            }
            if n == 1 {
                out.push((a, b));
                continue;
            }
            let two = BigRational::from(BigInt::from(2));
            let mut mid = (&a + &b) / &two;
            // Nudge off a root so interval endpoints stay regular.
            while sf.eval(&mid).is_zero() {
                mid = (&a + &mid) / &two;
            }
            let nl = Self::count_roots_between(&chain, &a, &mid);
            queue.push((a, mid.clone(), nl));
            queue.push((mid, b, n - nl));
        }
        out.sort_by(|x, y| x.0.cmp(&y.0));
        out
    }

    /// Shrinks an isolating interval by bisection until its width is below
    /// `2^-bits`.  The polynomial must change sign on the interval.
    pub fn refine_root(
        &self,
        mut lo: BigRational,
        mut hi: BigRational,
        bits: u32,
    ) -> (BigRational, BigRational) {
        let two = BigRational::from(BigInt::from(2));
        let width_target = BigRational::new(BigInt::one(), BigInt::one() << bits);
        let mut slo = Self::sign_at(self, &lo);
        if slo == 0 {
            return (lo.clone(), lo);
        }
        if Self::sign_at(self, &hi) == 0 {
            return (hi.clone(), hi);
        }
        while &hi - &lo > width_target {
            let mid = (&lo + &hi) / &two;
            let sm = Self::sign_at(self, &mid);
            if sm == 0 {
                return (mid.clone(), mid);
            }
            if sm == slo {
                lo = mid;
            } else {
                hi = mid;
            }
            let _ = &mut slo;
        }
        (lo, hi)
    }

    /// Exact rational roots inside `(lo, hi)`, found by the rational-root
    /// theorem on the cleared-denominator polynomial.  Gives up (returning
    /// only what was found by direct testing) when the endpoints have too
    /// many divisors to enumerate.
    pub fn rational_roots_in(
        &self,
        lo: &BigRational,
        hi: &BigRational,
        divisor_budget: usize,
    ) -> Vec<BigRational> {
        if self.is_zero() {
            return vec![];
        }
        // Clear denominators to an integer polynomial.
        let mut den = BigInt::one();
        for c in &self.coeffs {
            den = den.lcm(c.denom());
        }
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from(den.clone())).to_integer())
            .collect();
        let a0 = ints.iter().find(|c| !c.is_zero());
        let an = ints.last();
        let (a0, an) = match (a0, an) {
            (Some(a), Some(b)) => (a.clone(), b.clone()),
            _ => return vec![],
        };
        let p_divs = small_divisors(&a0.abs(), divisor_budget);
        let q_divs = small_divisors(&an.abs(), divisor_budget);
        let (p_divs, q_divs) = match (p_divs, q_divs) {
            (Some(p), Some(q)) => (p, q),
            _ => return vec![],
        };
        let mut found = Vec::new();
        for p in &p_divs {
            for q in &q_divs {
                for sgn in [1i32, -1] {
                    let cand = BigRational::new(p * sgn, q.clone());
                    if &cand > lo && &cand < hi && self.eval(&cand).is_zero() {
                        if !found.contains(&cand) {
                            found.push(cand);
                        }
                    }
                }
            }
        }
        found.sort();
        found
    }

    /// Resultant with `other`, computed as the Sylvester determinant by
    /// exact fraction-based Gaussian elimination.
    pub fn resultant(&self, other: &Self) -> BigRational {
        if self.is_zero() || other.is_zero() {
            return BigRational::zero();
        }
        let m = self.degree();
        let n = other.degree();
        if m == 0 {
            return pow_rat_int(&self.leading(), n as u32);
        }
        if n == 0 {
            return pow_rat_int(&other.leading(), m as u32);
        }
        let size = m + n;
        let mut mat = vec![vec![BigRational::zero(); size]; size];
        for (row, chunk) in mat.iter_mut().enumerate().take(n) {
            for (j, c) in self.coeffs.iter().rev().enumerate() {
                chunk[row + j] = c.clone();
            }
        }
        for row in 0..m {
            for (j, c) in other.coeffs.iter().rev().enumerate() {
                mat[n + row][row + j] = c.clone();
            }
        }
        determinant(mat)
    }

    /// Lagrange interpolation through distinct nodes.
    pub fn interpolate(points: &[(BigRational, BigRational)]) -> Self {
        let mut acc = Self::zero();
        for (i, (xi, yi)) in points.iter().enumerate() {
            let mut basis = Self::constant(BigRational::one());
            let mut denom = BigRational::one();
            for (j, (xj, _)) in points.iter().enumerate() {
                if i == j {
                    continue;
                }
                basis = basis.mul(&Self::from_coeffs(vec![-xj, BigRational::one()]));
                denom *= xi - xj;
            }
            acc = acc.add(&basis.scale(&(yi / denom)));
        }
        acc
    }
}

fn pow_rat_int(b: &BigRational, n: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..n {
        acc *= b;
    }
    acc
}

fn determinant(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero());
        let pr = match pivot {
            Some(p) => p,
            None => return BigRational::zero(),
        };
        if pr != col {
            m.swap(pr, col);
            det = -det;
        }
        let pv = m[col][col].clone();
        det *= &pv;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &pv;
            for c in col..n {
                let t = &m[col][c] * &f;
                m[r][c] -= t;
            }
        }
    }
    det
}

/// All positive divisors, or `None` if there would be more than `budget`.
fn small_divisors(n: &BigInt, budget: usize) -> Option<Vec<BigInt>> {
    if n.is_zero() {
        return Some(vec![BigInt::one()]);
    }
    let mut divs = Vec::new();
    let mut i = BigInt::one();
    loop {
        let sq = &i * &i;
        if sq > *n {
            break;
        }
        if (n % &i).is_zero() {
            divs.push(i.clone());
            let other = n / &i;
            if other != i {
                divs.push(other);
            }
            if divs.len() > budget {
                return None;
            }
        }
        i += 1;
        // Enumeration only makes sense for small constants.
        if i > BigInt::from(1_000_000u64) {
            return None;
        }
    }
    divs.sort();
    Some(divs)
}

/// Simple complex pair used for root reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl C64 {
    pub fn new(re: f64, im: f64) -> Self {
        C64 { re, im }
    }
    pub fn add(self, o: Self) -> Self {
        C64::new(self.re + o.re, self.im + o.im)
    }
    pub fn sub(self, o: Self) -> Self {
        C64::new(self.re - o.re, self.im - o.im)
    }
    pub fn mul(self, o: Self) -> Self {
        C64::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
    pub fn div(self, o: Self) -> Self {
        let d = o.re * o.re + o.im * o.im;
        C64::new(
            (self.re * o.re + self.im * o.im) / d,
            (self.im * o.re - self.re * o.im) / d,
        )
    }
    pub fn abs(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Approximate complex roots by the Durand-Kerner iteration, with the final
/// Weierstrass corrections returned as per-root error radii.
pub fn complex_roots(p: &RatPoly) -> Vec<(C64, f64)> {
    let n = p.degree();
    if n == 0 || p.is_zero() {
        return vec![];
    }
    let lead = p.leading();
    let coeffs: Vec<f64> = p
        .coeffs()
        .iter()
        .map(|c| {
            (c / &lead)
                .numer()
                .to_string()
                .parse::<f64>()
                .unwrap_or(0.0)
                / (c / &lead)
                    .denom()
                    .to_string()
                    .parse::<f64>()
                    .unwrap_or(1.0)
        })
        .collect();
    let eval = |z: C64| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            acc = acc.mul(z).add(C64::new(*c, 0.0));
        }
        acc
    };
    // Initial guesses on a slightly irrational spiral.
    let mut roots: Vec<C64> = (0..n)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64) / (n as f64) + 0.4;
            let r = 1.0 + 0.3 * (k as f64) / (n as f64);
            C64::new(r * ang.cos(), r * ang.sin())
        })
        .collect();
    for _ in 0..300 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom = denom.mul(roots[i].sub(roots[j]));
                }
            }
            let w = eval(roots[i]).div(denom);
            roots[i] = roots[i].sub(w);
            moved = moved.max(w.abs());
        }
        if moved < 1e-14 {
            break;
        }
    }
    roots
        .iter()
        .map(|&z| {
            let mut denom = C64::new(1.0, 0.0);
            for &w in &roots {
                if (z.sub(w)).abs() > 0.0 {
                    denom = denom.mul(z.sub(w));
                }
            }
            let w = eval(z).div(denom);
            (z, (n as f64) * w.abs())
        })
        .collect()
}
