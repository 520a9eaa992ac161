//! Arbitrary-precision real arithmetic.
//!
//! Thin context wrapper around [`astro_float::BigFloat`].  A [`Ctx`] fixes
//! the working precision in bits; every operation rounds to that precision.
//! Exact conversions to and from [`BigRational`] (every finite float is a
//! dyadic rational) are provided so that exact and approximate layers can
//! hand values back and forth without hidden loss.

use astro_float::{BigFloat, Consts, RoundingMode, Sign, WORD_BIT_SIZE};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cell::RefCell;

pub type Real = BigFloat;

const RM: RoundingMode = RoundingMode::ToEven;

/// Working-precision context for [`Real`] arithmetic.
pub struct Ctx {
    prec: usize,
    cc: RefCell<Consts>,
}

impl Ctx {
    pub fn new(prec_bits: u32) -> Self {
        Ctx {
            prec: prec_bits.max(64) as usize,
            cc: RefCell::new(Consts::new().expect("constants cache")),
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec as u32
    }

    /// A context with `extra` additional guard bits.
    pub fn widened(&self, extra: u32) -> Ctx {
        Ctx::new(self.prec() + extra)
    }

    // ---- constructors ----

    pub fn zero(&self) -> Real {
        BigFloat::from_u64(0, self.prec)
    }

    pub fn one(&self) -> Real {
        BigFloat::from_u64(1, self.prec)
    }

    pub fn from_i64(&self, v: i64) -> Real {
        BigFloat::from_i64(v, self.prec)
    }

    pub fn from_f64(&self, v: f64) -> Real {
        BigFloat::from_f64(v, self.prec)
    }

    /// Exact power of two `2^k`.
    pub fn pow2(&self, k: i64) -> Real {
        let mut one = self.one();
        // 1 has exponent 1 (value = 0.5 * 2^1); shift it.
        one.set_exponent((1 + k).try_into().expect("exponent out of range"));
        one
    }

    pub fn from_bigint(&self, n: &BigInt) -> Real {
        if n.is_zero() {
            return self.zero();
        }
        let sign = if n.is_negative() {
            Sign::Neg
        } else {
            Sign::Pos
        };
        let mag = n.magnitude();
        let nbits = mag.bits() as usize;
        let total = nbits.div_ceil(WORD_BIT_SIZE) * WORD_BIT_SIZE;
        let shifted: BigUint = mag << (total - nbits);
        let words: Vec<u64> = shifted.to_u64_digits();
        let mut bf = BigFloat::from_words(&words, sign, nbits as i32);
        bf.set_precision(self.prec.max(WORD_BIT_SIZE), RM)
            .expect("set_precision");
        bf
    }

    pub fn from_rational(&self, r: &BigRational) -> Real {
        if r.is_zero() {
            return self.zero();
        }
        let num = self.from_bigint(r.numer());
        let den = self.from_bigint(r.denom());
        num.div(&den, self.prec, RM)
    }

    // ---- conversions ----

    /// Exact value of a finite float as a rational (floats are dyadic).
    pub fn to_rational(&self, x: &Real) -> BigRational {
        if x.is_zero() {
            return BigRational::zero();
        }
        let (words, _len, sign, exp, _inexact) = x.as_raw_parts().expect("finite float");
        let mut mag = BigUint::zero();
        for (i, w) in words.iter().enumerate() {
            mag |= BigUint::from(*w) << (i * WORD_BIT_SIZE);
        }
        let nbits = (words.len() * WORD_BIT_SIZE) as i64;
        let e = exp as i64 - nbits;
        let num = BigInt::from(mag) * if sign == Sign::Neg { -1 } else { 1 };
        if e >= 0 {
            BigRational::from(num << e as u64)
        } else {
            BigRational::new(num, BigInt::one() << ((-e) as u64))
        }
    }

    pub fn to_f64(&self, x: &Real) -> f64 {
        // Round to f64 via a 64-bit intermediate.
        let mut y = x.clone();
        if y.set_precision(64, RM).is_err() {
            return f64::NAN;
        }
        let (words, _len, sign, exp, _inexact) = match y.as_raw_parts() {
            Some(p) => p,
            None => return f64::NAN,
        };
        let top = *words.last().unwrap_or(&0);
        let mant = top as f64 / (u64::MAX as f64 + 1.0);
        let v = mant * 2f64.powi(exp);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    // ---- arithmetic ----

    pub fn add(&self, a: &Real, b: &Real) -> Real {
        a.add(b, self.prec, RM)
    }

    pub fn sub(&self, a: &Real, b: &Real) -> Real {
        a.sub(b, self.prec, RM)
    }

    pub fn mul(&self, a: &Real, b: &Real) -> Real {
        a.mul(b, self.prec, RM)
    }

    pub fn div(&self, a: &Real, b: &Real) -> Real {
        a.div(b, self.prec, RM)
    }

    pub fn neg(&self, a: &Real) -> Real {
        a.neg()
    }

    pub fn abs(&self, a: &Real) -> Real {
        a.abs()
    }

    pub fn recip(&self, a: &Real) -> Real {
        self.one().div(a, self.prec, RM)
    }

    /// Integer power by binary exponentiation.
    pub fn powi(&self, a: &Real, mut n: i64) -> Real {
        if n == 0 {
            return self.one();
        }
        let inv = n < 0;
        if inv {
            n = -n;
        }
        let mut base = a.clone();
        let mut acc = self.one();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            n >>= 1;
        }
        if inv {
            self.recip(&acc)
        } else {
            acc
        }
    }

    pub fn sqrt(&self, a: &Real) -> Real {
        a.sqrt(self.prec, RM)
    }

    pub fn exp(&self, a: &Real) -> Real {
        a.exp(self.prec, RM, &mut self.cc.borrow_mut())
    }

    pub fn ln(&self, a: &Real) -> Real {
        a.ln(self.prec, RM, &mut self.cc.borrow_mut())
    }

    pub fn sin(&self, a: &Real) -> Real {
        a.sin(self.prec, RM, &mut self.cc.borrow_mut())
    }

    pub fn cos(&self, a: &Real) -> Real {
        a.cos(self.prec, RM, &mut self.cc.borrow_mut())
    }

    /// Positive real `n`th root of a positive value.
    pub fn nth_root(&self, a: &Real, n: u32) -> Real {
        assert!(n > 0);
        if n == 1 {
            return a.clone();
        }
        if n == 2 {
            return self.sqrt(a);
        }
        assert!(
            a.is_positive() && !a.is_zero(),
            "nth_root requires a positive argument"
        );
        let p = self.prec + 32;
        let mut cc = self.cc.borrow_mut();
        let l = a.ln(p, RM, &mut cc);
        let q = l.div(&BigFloat::from_u64(n as u64, p), p, RM);
        let mut r = q.exp(p, RM, &mut cc);
        r.set_precision(self.prec, RM).expect("set_precision");
        r
    }

    /// `a^(p/q)` for positive `a` and exact rational exponent.
    pub fn pow_rat(&self, a: &Real, ex: &BigRational) -> Real {
        if ex.is_zero() {
            return self.one();
        }
        if ex.is_integer() {
            let n = ex.numer().to_i64().expect("exponent fits i64");
            return self.powi(a, n);
        }
        assert!(
            a.is_positive() && !a.is_zero(),
            "fractional power requires a positive base"
        );
        let den = ex.denom().to_u32().expect("exponent denominator fits u32");
        let num = ex.numer().to_i64().expect("exponent numerator fits i64");
        let root = self.nth_root(a, den);
        self.powi(&root, num)
    }

    // ---- constants ----

    pub fn pi(&self) -> Real {
        self.cc.borrow_mut().pi(self.prec, RM)
    }

    pub fn two_pi(&self) -> Real {
        let pi = self.pi();
        self.add(&pi, &pi)
    }

    // ---- comparisons and bounds ----

    /// `|a - b| < 2^k`
    pub fn close_pow2(&self, a: &Real, b: &Real, k: i64) -> bool {
        let d = self.sub(a, b).abs();
        matches!(d.cmp(&self.pow2(k)), Some(s) if s < 0)
    }

    pub fn lt(&self, a: &Real, b: &Real) -> bool {
        matches!(a.cmp(b), Some(s) if s < 0)
    }

    pub fn le(&self, a: &Real, b: &Real) -> bool {
        matches!(a.cmp(b), Some(s) if s <= 0)
    }

    pub fn eq(&self, a: &Real, b: &Real) -> bool {
        matches!(a.cmp(b), Some(0))
    }

    /// Formats with enough decimal digits to round-trip at this precision.
    pub fn to_decimal_string(&self, x: &Real) -> String {
        format!("{}", x)
    }

    pub fn parse_decimal(&self, s: &str) -> Option<Real> {
        let v = BigFloat::parse(
            s,
            astro_float::Radix::Dec,
            self.prec,
            RM,
            &mut self.cc.borrow_mut(),
        );
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }
}

/// Truncates a rational to a nearby one with denominator at most `max_den`
/// (best continued-fraction convergent).
pub fn limit_denominator(r: &BigRational, max_den: &BigInt) -> BigRational {
    if r.denom() <= max_den {
        return r.clone();
    }
    // Stern-Brocot style walk over continued-fraction convergents.
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut num = r.numer().clone();
    let mut den = r.denom().clone();
    loop {
        let a = num.clone() / den.clone();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if &q2 > max_den {
            // Largest admissible semiconvergent.
            let k = (max_den - &q0) / &q1;
            let pa = &k * &p1 + &p0;
            let qa = &k * &q1 + &q0;
            let c1 = BigRational::new(p1.clone(), q1.clone());
            let cand = if qa.is_positive() {
                let c2 = BigRational::new(pa, qa);
                if (r - &c2).abs() < (r - &c1).abs() {
                    c2
                } else {
                    c1
                }
            } else {
                c1
            };
            return cand;
        }
        let rem = &num - &a * &den;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        if rem.is_zero() {
            return BigRational::new(p1, q1);
        }
        num = std::mem::replace(&mut den, rem);
    }
}

/// Attempts to identify a float as a rational with a small denominator.
///
/// Returns the candidate only if it matches `x` to within `2^-tol_bits`.
pub fn snap_to_rational(ctx: &Ctx, x: &Real, max_den: u64, tol_bits: u32) -> Option<BigRational> {
    let exact = ctx.to_rational(x);
    let cand = limit_denominator(&exact, &BigInt::from(max_den));
    let err = (&exact - &cand).abs();
    let tol = BigRational::new(BigInt::one(), BigInt::one() << tol_bits);
    if err < tol {
        Some(cand)
    } else {
        None
    }
}
