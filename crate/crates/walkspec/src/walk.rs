//! Walk shapes: exact Laurent polynomials with probability coefficients.
//!
//! A shape is the step distribution `chi(t) = sum_k kappa_k t^k` with
//! `kappa_k >= 0`, `chi(1) = 1`, and support reaching both a negative
//! minimum `-e` and a positive maximum `f`.  Shapes are immutable after
//! construction; every operation is a pure function.

use crate::ratpoly::RatPoly;
use crate::real::{Ctx, Real};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type Rational = BigRational;

/// Convenience constructor for small rationals.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rational::new(n, d))
    } else {
        let n: BigInt = s.parse().ok()?;
        Some(Rational::from(n))
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShapeError {
    #[error("negative coefficient at exponent {exponent}")]
    NegativeCoefficient { exponent: i64 },
    #[error("coefficients sum to {sum}, expected 1")]
    MassNotOne { sum: String },
    #[error("support has no negative exponent")]
    NoNegativeSupport,
    #[error("support has no positive exponent")]
    NoPositiveSupport,
    #[error("walk is biased: mean is {mean}")]
    Biased { mean: String },
}

impl ShapeError {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            ShapeError::NegativeCoefficient { .. } => "NegativeCoefficient",
            ShapeError::MassNotOne { .. } => "MassNotOne",
            ShapeError::NoNegativeSupport => "NoNegativeSupport",
            ShapeError::NoPositiveSupport => "NoPositiveSupport",
            ShapeError::Biased { .. } => "Biased",
        }
    }
}

/// Failure while reading a shape from JSON.
#[derive(Debug, Error)]
pub enum ShapeJsonError {
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

impl ShapeJsonError {
    pub fn code(&self) -> &'static str {
        match self {
            ShapeJsonError::Parse(_) => "Parse",
            ShapeJsonError::Shape(e) => e.code(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScaleError {
    #[error("root isolation did not reach the requested precision")]
    PrecisionExhausted,
}

/// Outcome of comparing two shapes up to the reflection `t -> 1/t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equivalence {
    Identical,
    Reflected,
    No,
}

/// Exact step distribution of a walk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkShape {
    coeffs: BTreeMap<i64, Rational>,
    e: u32,
    f: u32,
    unbiased: bool,
}

impl WalkShape {
    /// Validates and normalizes a coefficient map.  Zero coefficients are
    /// dropped so that support, `e`, and `f` are well defined.
    pub fn new(
        coeffs: BTreeMap<i64, Rational>,
        require_unbiased: bool,
    ) -> Result<Self, ShapeError> {
        let mut map = BTreeMap::new();
        for (k, v) in coeffs {
            if v.is_zero() {
                continue;
            }
            if v.is_negative() {
                return Err(ShapeError::NegativeCoefficient { exponent: k });
            }
            map.insert(k, v);
        }
        let min = *map.keys().next().ok_or(ShapeError::NoNegativeSupport)?;
        let max = *map.keys().next_back().unwrap();
        if min >= 0 {
            return Err(ShapeError::NoNegativeSupport);
        }
        if max <= 0 {
            return Err(ShapeError::NoPositiveSupport);
        }
        let sum: Rational = map.values().sum();
        if !sum.is_one() {
            return Err(ShapeError::MassNotOne {
                sum: format_rational(&sum),
            });
        }
        let mean: Rational = map
            .iter()
            .map(|(k, v)| v * Rational::from(BigInt::from(*k)))
            .sum();
        let unbiased = mean.is_zero();
        if require_unbiased && !unbiased {
            return Err(ShapeError::Biased {
                mean: format_rational(&mean),
            });
        }
        Ok(WalkShape {
            coeffs: map,
            e: (-min) as u32,
            f: max as u32,
            unbiased,
        })
    }

    pub fn from_pairs(
        pairs: &[(i64, Rational)],
        require_unbiased: bool,
    ) -> Result<Self, ShapeError> {
        Self::new(pairs.iter().cloned().collect(), require_unbiased)
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Rational> {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Rational {
        self.coeffs.get(&k).cloned().unwrap_or_else(Rational::zero)
    }

    /// Negative reach: `min(support) = -e`.
    pub fn e(&self) -> u32 {
        self.e
    }

    /// Positive reach: `max(support) = f`.
    pub fn f(&self) -> u32 {
        self.f
    }

    pub fn degree(&self) -> u32 {
        self.e + self.f
    }

    pub fn unbiased(&self) -> bool {
        self.unbiased
    }

    pub fn support(&self) -> Vec<i64> {
        self.coeffs.keys().cloned().collect()
    }

    pub fn mean(&self) -> Rational {
        self.coeffs
            .iter()
            .map(|(k, v)| v * Rational::from(BigInt::from(*k)))
            .sum()
    }

    /// Exact evaluation of `chi` at a nonzero rational point.
    pub fn chi_eval(&self, t: &Rational) -> Rational {
        assert!(!t.is_zero());
        let mut acc = Rational::zero();
        for (k, v) in &self.coeffs {
            let mut p = Rational::one();
            let (mut n, inv) = if *k >= 0 { (*k, false) } else { (-k, true) };
            let base = if inv { t.recip() } else { t.clone() };
            while n > 0 {
                p *= &base;
                n -= 1;
            }
            acc += v * p;
        }
        acc
    }

    /// High-precision evaluation of `chi` at a positive real point.
    pub fn chi_eval_real(&self, ctx: &Ctx, t: &Real) -> Real {
        let mut acc = ctx.zero();
        for (k, v) in &self.coeffs {
            let p = ctx.powi(t, *k);
            acc = ctx.add(&acc, &ctx.mul(&ctx.from_rational(v), &p));
        }
        acc
    }

    /// Raw moments `J_2 .. J_m` of the step distribution.
    pub fn moments(&self, m: u32) -> MomentVector {
        assert!(m >= 2, "moments are defined for m >= 2");
        let mut values = Vec::with_capacity((m - 1) as usize);
        for n in 2..=m {
            let mut j = Rational::zero();
            for (k, v) in &self.coeffs {
                let mut p = BigInt::one();
                for _ in 0..n {
                    p *= BigInt::from(*k);
                }
                j += v * Rational::from(p);
            }
            values.push(j);
        }
        MomentVector { values }
    }

    /// gcd of the absolute values of the support exponents.
    pub fn support_gcd(&self) -> u64 {
        let mut g: u64 = 0;
        for k in self.coeffs.keys() {
            g = g.gcd(&(k.unsigned_abs()));
        }
        g
    }

    /// Shape of the reindexed walk `chi(t^n)`; `n < 0` realizes `t -> 1/t`.
    pub fn reindex(&self, n: i64) -> WalkShape {
        assert!(n != 0, "reindex requires a nonzero exponent");
        let coeffs: BTreeMap<i64, Rational> = self
            .coeffs
            .iter()
            .map(|(k, v)| (k * n, v.clone()))
            .collect();
        // Reindexing preserves validity.
        WalkShape::new(coeffs, false).expect("reindexed shape is valid")
    }

    /// Compares against `other` and the reflection of `other`.
    pub fn equivalent(&self, other: &WalkShape) -> Equivalence {
        if self == other {
            Equivalence::Identical
        } else if *self == other.reindex(-1) {
            Equivalence::Reflected
        } else {
            Equivalence::No
        }
    }

    /// All real `lambda > 0`, `lambda != 1`, with `chi(lambda) = 1`, each
    /// paired with the rescaled shape with coefficients
    /// `kappa_k lambda^k`.  Empty for unbiased shapes.
    ///
    /// The roots are isolated by a Sturm chain of the integer polynomial
    /// `t^e (chi(t) - 1)` and refined by bisection to `precision` bits.
    /// Exact rational roots are detected first; irrational roots produce a
    /// rescaled shape built from a dyadic approximation of `lambda`,
    /// renormalized so its mass is exactly 1.
    pub fn scale_equivalents(&self, precision: u32) -> Result<Vec<(Real, WalkShape)>, ScaleError> {
        // p(t) = t^e (chi(t) - 1): coefficient of t^{k+e} is kappa_k, minus 1 at t^e.
        let e = self.e as i64;
        let deg = (self.e + self.f) as usize;
        let mut coeffs = vec![Rational::zero(); deg + 1];
        for (k, v) in &self.coeffs {
            coeffs[(k + e) as usize] += v;
        }
        coeffs[self.e as usize] -= Rational::one();
        let p = RatPoly::from_coeffs(coeffs);
        // t = 1 is always a root (chi(1) = 1); for unbiased shapes it is a
        // double root.  Deflate it completely.
        let linear = RatPoly::from_coeffs(vec![-Rational::one(), Rational::one()]);
        let mut q = p;
        loop {
            let (quot, rem) = q.divrem(&linear);
            if rem.is_zero() {
                q = quot;
            } else {
                break;
            }
            if q.degree() == 0 {
                break;
            }
        }
        let ctx = Ctx::new(precision + 32);
        let mut out = Vec::new();
        if q.degree() == 0 {
            return Ok(out);
        }
        let bound = q.root_bound();
        let intervals = q.isolate_roots_in(&Rational::zero(), &bound);
        for (lo, hi) in intervals {
            // Exact rational root detection: refine, snap to a
            // bounded-denominator rational, verify exactly.
            let (rlo, rhi) = q.refine_root(lo, hi, precision + 16);
            let mid = (&rlo + &rhi) / Rational::from(BigInt::from(2));
            let max_den = BigInt::from(1) << (precision / 2).clamp(32, 160);
            let cand = crate::real::limit_denominator(&mid, &max_den);
            let lambda_rat = if cand.is_positive() && q.eval(&cand).is_zero() {
                Some(cand)
            } else {
                None
            };
            let lambda_real = match &lambda_rat {
                Some(lr) => ctx.from_rational(lr),
                None => ctx.from_rational(&mid),
            };
            // Skip lambda = 1 (root was deflated, but guard against
            // rounding artifacts).
            if let Some(lr) = &lambda_rat {
                if lr.is_one() {
                    continue;
                }
            }
            let shape = match &lambda_rat {
                Some(lr) => {
                    let coeffs: BTreeMap<i64, Rational> = self
                        .coeffs
                        .iter()
                        .map(|(k, v)| (*k, v * pow_rational(lr, *k)))
                        .collect();
                    WalkShape::new(coeffs, false).expect("rescaled shape is valid")
                }
                None => {
                    let pairs: Vec<(i64, Real)> = self
                        .coeffs
                        .iter()
                        .map(|(k, v)| {
                            (
                                *k,
                                ctx.mul(&ctx.from_rational(v), &ctx.powi(&lambda_real, *k)),
                            )
                        })
                        .collect();
                    WalkShape::from_real_coeffs(&ctx, &pairs)
                        .map_err(|_| ScaleError::PrecisionExhausted)?
                }
            };
            out.push((lambda_real, shape));
        }
        Ok(out)
    }

    /// Builds a shape from high-precision real coefficients by exact dyadic
    /// rationalization followed by renormalization to unit mass.  Intended
    /// for rescaled or reconstructed shapes whose coefficients are known
    /// only approximately.
    pub(crate) fn from_real_coeffs(ctx: &Ctx, pairs: &[(i64, Real)]) -> Result<Self, ShapeError> {
        // Coefficients below the noise floor are treated as zero.
        let floor = ctx.pow2(-((ctx.prec() as i64) * 3 / 4));
        let mut map = BTreeMap::new();
        for (k, v) in pairs {
            if ctx.lt(&ctx.abs(v), &floor) {
                continue;
            }
            let r = ctx.to_rational(v);
            if r.is_negative() {
                return Err(ShapeError::NegativeCoefficient { exponent: *k });
            }
            map.insert(*k, r);
        }
        let sum: Rational = map.values().sum();
        if sum.is_zero() {
            return Err(ShapeError::MassNotOne {
                sum: "0".to_string(),
            });
        }
        let map: BTreeMap<i64, Rational> = map.into_iter().map(|(k, v)| (k, v / &sum)).collect();
        WalkShape::new(map, false)
    }

    // ---- JSON ----

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Self, ShapeJsonError> {
        let parsed: WalkShapeJson =
            serde_json::from_str(s).map_err(|e| ShapeJsonError::Parse(e.to_string()))?;
        Ok(WalkShape::new(parsed.coeffs, false)?)
    }
}

fn pow_rational(b: &Rational, k: i64) -> Rational {
    let mut acc = Rational::one();
    let (n, inv) = if k >= 0 { (k, false) } else { (-k, true) };
    let base = if inv { b.recip() } else { b.clone() };
    for _ in 0..n {
        acc *= &base;
    }
    acc
}

/// Moments `J_2 .. J_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentVector {
    values: Vec<Rational>,
}

impl MomentVector {
    /// `J_n` for `2 <= n <= m`.
    pub fn j(&self, n: u32) -> &Rational {
        &self.values[(n - 2) as usize]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn max_order(&self) -> u32 {
        self.values.len() as u32 + 1
    }
}

// ---- serde: {"schema": "walkshape/1", "coeffs": {"<k>": "<p>/<q>"}} ----

impl Serialize for WalkShape {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut top = serializer.serialize_map(Some(2))?;
        top.serialize_entry("schema", "walkshape/1")?;
        let coeffs: BTreeMap<String, String> = self
            .coeffs
            .iter()
            .map(|(k, v)| (k.to_string(), format_rational(v)))
            .collect();
        top.serialize_entry("coeffs", &coeffs)?;
        top.end()
    }
}

struct WalkShapeJson {
    coeffs: BTreeMap<i64, Rational>,
}

impl<'de> Deserialize<'de> for WalkShapeJson {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct TopVisitor;
        impl<'de> Visitor<'de> for TopVisitor {
            type Value = WalkShapeJson;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a shape object with a \"coeffs\" map")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut coeffs: Option<BTreeMap<i64, Rational>> = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "coeffs" => {
                            if coeffs.is_some() {
                                return Err(de::Error::custom("duplicate \"coeffs\" field"));
                            }
                            coeffs = Some(map.next_value_seed(CoeffMapSeed)?);
                        }
                        "schema" => {
                            let v: String = map.next_value()?;
                            if !v.starts_with("walkshape/") {
                                return Err(de::Error::custom(format!("unexpected schema {v:?}")));
                            }
                        }
                        other => return Err(de::Error::custom(format!("unknown field {other:?}"))),
                    }
                }
                Ok(WalkShapeJson {
                    coeffs: coeffs.ok_or_else(|| de::Error::missing_field("coeffs"))?,
                })
            }
        }
        deserializer.deserialize_map(TopVisitor)
    }
}

struct CoeffMapSeed;

impl<'de> de::DeserializeSeed<'de> for CoeffMapSeed {
    type Value = BTreeMap<i64, Rational>;
    fn deserialize<D: Deserializer<'de>>(self, deserializer: D) -> Result<Self::Value, D::Error> {
        struct CoeffVisitor;
        impl<'de> Visitor<'de> for CoeffVisitor {
            type Value = BTreeMap<i64, Rational>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a map from integer exponents to rationals")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((k, v)) = map.next_entry::<String, String>()? {
                    let exp: i64 = k
                        .trim()
                        .parse()
                        .map_err(|_| de::Error::custom(format!("bad exponent key {k:?}")))?;
                    let val = parse_rational(&v)
                        .ok_or_else(|| de::Error::custom(format!("bad rational {v:?}")))?;
                    // Duplicate exponent keys are rejected rather than
                    // silently overwritten.
                    if out.insert(exp, val).is_some() {
                        return Err(de::Error::custom(format!("duplicate key {k:?}")));
                    }
                }
                Ok(out)
            }
        }
        deserializer.deserialize_map(CoeffVisitor)
    }
}

/// The symmetric simple walk `{-1: 1/2, 1: 1/2}`.
pub fn simple_walk() -> WalkShape {
    WalkShape::from_pairs(&[(-1, rat(1, 2)), (1, rat(1, 2))], true).unwrap()
}

/// The lazy walk `{-1: 1/4, 0: 1/2, 1: 1/4}`.
pub fn lazy_walk() -> WalkShape {
    WalkShape::from_pairs(&[(-1, rat(1, 4)), (0, rat(1, 2)), (1, rat(1, 4))], true).unwrap()
}
