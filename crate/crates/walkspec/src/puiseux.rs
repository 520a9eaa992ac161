//! Truncated Puiseux series and the branch functions of `u = chi(t) - 1`.
//!
//! A series is stored on the lattice `(base + j)/ram` of exponents of a
//! local variable: `u` itself for expansions at zero, `1/u` for expansions
//! at infinity.  Coefficients are arbitrary-precision reals; exponent
//! arithmetic is exact.  Truncation orders are carried on every series and
//! propagated conservatively, so precision loss is always visible.
//!
//! The engine provides `m`-th roots (binomial series), compositional
//! inverses (Lagrange inversion), and composition, which together build the
//! two real inverse branches `alpha_minus: (0,1]`, `alpha_plus: [1,inf)` of
//! `chi` and the associated `gamma = 1/(t chi'(t))` branch series at
//! `u = infinity` and at `u = 0`.

use crate::real::{Ctx, Real};
use crate::walk::{format_rational, Rational, WalkShape};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PuiseuxError {
    #[error("leading coefficient must be positive for fractional powers")]
    NonPositiveLeading,
    #[error("series is not of type (1,1) on an integer lattice")]
    NotType11,
    #[error("composition exponents are not well defined")]
    ExponentClash,
    #[error("operation requires an unbiased shape")]
    Biased,
    #[error("series is identically zero")]
    ZeroSeries,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// expansion in `u` near `u = 0`
    AtZero,
    /// expansion in `1/u` near `u = infinity`
    AtInfinity,
}

// ---------------------------------------------------------------------------
// integer-lattice worker
// ---------------------------------------------------------------------------

/// Series on an integer exponent lattice of some local variable `x`:
/// `coeffs[j]` multiplies `x^(base+j)`.  Truncation order is `base + len`.
#[derive(Clone, Debug)]
pub(crate) struct XSeries {
    base: i64,
    coeffs: Vec<Real>,
}

impl XSeries {
    fn len(&self) -> usize {
        self.coeffs.len()
    }

    fn trunc(&self) -> i64 {
        self.base + self.coeffs.len() as i64
    }

    /// Drops exactly-zero leading coefficients.
    fn normalized(mut self) -> Self {
        let mut drop = 0;
        for c in &self.coeffs {
            if c.is_zero() {
                drop += 1;
            } else {
                break;
            }
        }
        if drop > 0 && drop < self.coeffs.len() {
            self.coeffs.drain(..drop);
            self.base += drop as i64;
        }
        self
    }

    fn leading(&self) -> &Real {
        &self.coeffs[0]
    }

    fn scale(&self, ctx: &Ctx, c: &Real) -> Self {
        XSeries {
            base: self.base,
            coeffs: self.coeffs.iter().map(|a| ctx.mul(a, c)).collect(),
        }
    }

    fn neg(&self) -> Self {
        XSeries {
            base: self.base,
            coeffs: self.coeffs.iter().map(|a| a.neg()).collect(),
        }
    }

    fn add(&self, ctx: &Ctx, other: &Self) -> Self {
        let base = self.base.min(other.base);
        let trunc = self.trunc().min(other.trunc());
        let len = (trunc - base).max(0) as usize;
        let mut coeffs = vec![ctx.zero(); len];
        for (slot, j) in coeffs.iter_mut().zip(base..trunc) {
            let a = self.get(ctx, j);
            let b = other.get(ctx, j);
            *slot = ctx.add(&a, &b);
        }
        XSeries { base, coeffs }.normalized()
    }

    fn sub(&self, ctx: &Ctx, other: &Self) -> Self {
        self.add(ctx, &other.neg())
    }

    pub(crate) fn get(&self, ctx: &Ctx, exp: i64) -> Real {
        let j = exp - self.base;
        if j < 0 || j as usize >= self.coeffs.len() {
            ctx.zero()
        } else {
            self.coeffs[j as usize].clone()
        }
    }

    fn mul(&self, ctx: &Ctx, other: &Self) -> Self {
        let base = self.base + other.base;
        let trunc = (self.trunc() + other.base).min(other.trunc() + self.base);
        let len = (trunc - base).max(0) as usize;
        let mut coeffs = vec![ctx.zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                let t = ctx.mul(a, b);
                coeffs[i + j] = ctx.add(&coeffs[i + j], &t);
            }
        }
        XSeries { base, coeffs }
    }

    /// `(1 + R)^alpha` for the relative unit part `R = self/lead/x^base - 1`,
    /// by the Miller recurrence; returns the full `self^alpha` including the
    /// `lead^alpha x^(base*alpha)` prefix handled by the caller.
    fn unit_power(&self, ctx: &Ctx, alpha: &Rational) -> Vec<Real> {
        // r[k] = coeffs[k]/coeffs[0] for k >= 1
        let lead = self.leading().clone();
        let n = self.coeffs.len();
        let r: Vec<Real> = self.coeffs.iter().map(|c| ctx.div(c, &lead)).collect();
        let mut b = vec![ctx.zero(); n];
        b[0] = ctx.one();
        for m in 1..n {
            let mut acc = ctx.zero();
            for k in 1..=m {
                // (alpha k - (m - k)) / m
                let c = (alpha * Rational::from(BigInt::from(k as i64))
                    - Rational::from(BigInt::from((m - k) as i64)))
                    / Rational::from(BigInt::from(m as i64));
                if c.is_zero() {
                    continue;
                }
                let t = ctx.mul(&ctx.from_rational(&c), &ctx.mul(&r[k], &b[m - k]));
                acc = ctx.add(&acc, &t);
            }
            b[m] = acc;
        }
        b
    }

    /// Integer power; negative exponents go through the reciprocal.
    fn powi(&self, ctx: &Ctx, n: i64) -> Self {
        if n == 0 {
            return XSeries {
                base: 0,
                coeffs: {
                    let mut v = vec![ctx.zero(); self.coeffs.len()];
                    v[0] = ctx.one();
                    v
                },
            };
        }
        let base_pow = if n > 0 { self.clone() } else { self.recip(ctx) };
        let mut acc = base_pow.clone();
        for _ in 1..n.abs() {
            acc = acc.mul(ctx, &base_pow);
        }
        acc
    }

    fn recip(&self, ctx: &Ctx) -> Self {
        let lead = self.leading();
        let unit = self.unit_power(ctx, &-Rational::one());
        let inv_lead = ctx.recip(lead);
        XSeries {
            base: -self.base,
            coeffs: unit.iter().map(|c| ctx.mul(c, &inv_lead)).collect(),
        }
    }

    fn derivative(&self, ctx: &Ctx) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (j, c) in self.coeffs.iter().enumerate() {
            let e = self.base + j as i64;
            coeffs.push(ctx.mul(c, &ctx.from_i64(e)));
        }
        let mut out = XSeries {
            base: self.base - 1,
            coeffs,
        };
        // derivative of a constant term writes an exact zero slot
        out = out.normalized();
        out
    }

    /// Substitutes `x -> -x` (requires integer exponents, which this
    /// lattice guarantees).
    fn flip_sign(&self, _ctx: &Ctx) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if (self.base + j as i64).rem_euclid(2) == 1 {
                    c.neg()
                } else {
                    c.clone()
                }
            })
            .collect();
        XSeries {
            base: self.base,
            coeffs,
        }
    }

    /// Compositional inverse of a type (1,1) series, by Lagrange inversion:
    /// the `x^r` coefficient of the inverse is `1/r` times the `x^{r-1}`
    /// coefficient of `(F/x)^{-r}`.
    fn lagrange_invert(&self, ctx: &Ctx) -> Self {
        debug_assert_eq!(self.base, 1);
        let n = self.coeffs.len();
        // U = F/x as a unit series, P = U^{-1}
        let u = XSeries {
            base: 0,
            coeffs: self.coeffs.clone(),
        };
        let p = XSeries {
            base: 0,
            coeffs: u.unit_power(ctx, &-Rational::one()),
        };
        let mut q = p.clone(); // P^r
        let mut coeffs = vec![ctx.zero(); n];
        coeffs[0] = ctx.one(); // r = 1: [x^0] P / 1 = 1 (leading coefficient 1)
        for r in 2..=n as i64 {
            q = q.mul(ctx, &p);
            if (r - 1) as usize >= q.coeffs.len() {
                break;
            }
            let c = ctx.div(&q.coeffs[(r - 1) as usize], &ctx.from_i64(r));
            coeffs[(r - 1) as usize] = c;
        }
        XSeries { base: 1, coeffs }
    }

    /// Adds an exact constant at exponent 0 without changing the
    /// truncation order (constants are known to all orders).
    fn add_const(&self, ctx: &Ctx, c: &Real) -> Self {
        let base = self.base.min(0);
        let trunc = self.trunc().max(1);
        let len = (trunc - base) as usize;
        let mut coeffs = vec![ctx.zero(); len];
        for (j, v) in self.coeffs.iter().enumerate() {
            coeffs[(self.base - base) as usize + j] = v.clone();
        }
        let at = (-base) as usize;
        coeffs[at] = ctx.add(&coeffs[at], c);
        XSeries { base, coeffs }.normalized()
    }

    /// Composition `G(F)` for `F` of positive base; fractional powers of
    /// `F` are not needed here because callers arrange `G` on an integer
    /// lattice.
    fn compose(&self, ctx: &Ctx, f: &Self) -> Self {
        debug_assert!(
            f.base >= 1,
            "composition needs a positive-order inner series"
        );
        // Horner over ascending coefficients of G; constants carry no
        // truncation of their own.
        let mut acc = XSeries {
            base: 0,
            coeffs: vec![ctx.zero(); f.len().max(1)],
        };
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(ctx, f);
            acc = acc.add_const(ctx, c);
        }
        let prefix = f.powi(ctx, self.base);
        acc.mul(ctx, &prefix)
    }
}

// ---------------------------------------------------------------------------
// public series type
// ---------------------------------------------------------------------------

/// Truncated Puiseux series with rational exponent bookkeeping.
#[derive(Clone, Debug)]
pub struct PuiseuxSeries {
    dir: Direction,
    /// exponent denominator (ramification)
    ram: u32,
    xs: XSeries,
    prec: u32,
    /// exact rational value of the leading coefficient, when known from
    /// type algebra rather than floating arithmetic
    leading_exact: Option<Rational>,
}

impl PuiseuxSeries {
    pub fn from_coeffs(
        dir: Direction,
        ram: u32,
        base_times_ram: i64,
        coeffs: Vec<Real>,
        prec: u32,
    ) -> Self {
        assert!(ram >= 1);
        assert!(!coeffs.is_empty());
        PuiseuxSeries {
            dir,
            ram,
            xs: XSeries {
                base: base_times_ram,
                coeffs,
            },
            prec,
            leading_exact: None,
        }
        .normalized()
    }

    fn normalized(mut self) -> Self {
        self.xs = self.xs.normalized();
        self
    }

    pub fn direction(&self) -> Direction {
        self.dir
    }

    pub fn ramification(&self) -> u32 {
        self.ram
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    fn ctx(&self) -> Ctx {
        Ctx::new(self.prec)
    }

    /// Exponent of the leading term in the local variable.
    pub fn base_exponent(&self) -> Rational {
        Rational::new(BigInt::from(self.xs.base), BigInt::from(self.ram))
    }

    /// First unknown exponent in the local variable.
    pub fn truncation_order(&self) -> Rational {
        Rational::new(BigInt::from(self.xs.trunc()), BigInt::from(self.ram))
    }

    /// Exponent of `coeffs()[j]` in the local variable.
    pub fn exponent(&self, j: usize) -> Rational {
        Rational::new(
            BigInt::from(self.xs.base + j as i64),
            BigInt::from(self.ram),
        )
    }

    /// Exponent of `coeffs()[j]` as a power of `u` (negated at infinity).
    pub fn exponent_in_u(&self, j: usize) -> Rational {
        let e = self.exponent(j);
        match self.dir {
            Direction::AtZero => e,
            Direction::AtInfinity => -e,
        }
    }

    pub fn coeffs(&self) -> &[Real] {
        &self.xs.coeffs
    }

    pub fn leading_coefficient(&self) -> &Real {
        self.xs.leading()
    }

    /// Exact leading coefficient when the construction pinned it.
    pub fn leading_exact(&self) -> Option<&Rational> {
        self.leading_exact.as_ref()
    }

    pub(crate) fn with_leading_exact(mut self, r: Rational) -> Self {
        // the float value must agree with the pinned exact value
        let ctx = self.ctx();
        debug_assert!(
            ctx.close_pow2(
                self.xs.leading(),
                &ctx.from_rational(&r),
                -(self.prec as i64) / 2
            ),
            "type-algebra leading coefficient disagrees with computed value"
        );
        self.xs.coeffs[0] = ctx.from_rational(&r);
        self.leading_exact = Some(r);
        self
    }

    /// Coefficient at a given exponent of `u` (`None` if off-lattice or
    /// beyond the truncation order).
    pub fn coefficient_at_u(&self, u_exp: &Rational) -> Option<&Real> {
        let local = match self.dir {
            Direction::AtZero => u_exp.clone(),
            Direction::AtInfinity => -u_exp,
        };
        let idx = local * Rational::from(BigInt::from(self.ram));
        if !idx.is_integer() {
            return None;
        }
        let j = idx.to_integer().to_i64()? - self.xs.base;
        if j < 0 || j as usize >= self.xs.coeffs.len() {
            None
        } else {
            Some(&self.xs.coeffs[j as usize])
        }
    }

    fn with_ram(&self, ctx: &Ctx, new_ram: u32) -> XSeries {
        assert!(new_ram % self.ram == 0);
        let k = (new_ram / self.ram) as i64;
        if k == 1 {
            return self.xs.clone();
        }
        let len = self.xs.coeffs.len() as i64 * k - (k - 1);
        let mut coeffs = vec![ctx.zero(); len.max(0) as usize];
        for (j, c) in self.xs.coeffs.iter().enumerate() {
            coeffs[j * k as usize] = c.clone();
        }
        XSeries {
            base: self.xs.base * k,
            coeffs,
        }
    }

    /// Addition on the merged lattice (directions must match).
    pub fn add(&self, other: &Self) -> Self {
        assert!(self.dir == other.dir, "direction mismatch");
        let ctx = Ctx::new(self.prec.min(other.prec));
        let ram = (self.ram as i64).lcm(&(other.ram as i64)) as u32;
        let a = self.with_ram(&ctx, ram);
        let b = other.with_ram(&ctx, ram);
        // truncation: min over inputs, also capped by each series' span
        let trunc = {
            let ta = self.truncation_order() * Rational::from(BigInt::from(ram));
            let tb = other.truncation_order() * Rational::from(BigInt::from(ram));
            ta.min(tb).to_integer().to_i64().unwrap()
        };
        let mut sum = a.add(&ctx, &b);
        if sum.trunc() > trunc {
            let keep = (trunc - sum.base).max(0) as usize;
            sum.coeffs.truncate(keep);
        }
        PuiseuxSeries {
            dir: self.dir,
            ram,
            xs: sum,
            prec: self.prec.min(other.prec),
            leading_exact: None,
        }
        .normalized()
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        out.xs = out.xs.neg();
        out.leading_exact = self.leading_exact.as_ref().map(|r| -r);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert!(self.dir == other.dir, "direction mismatch");
        let ctx = Ctx::new(self.prec.min(other.prec));
        let ram = (self.ram as i64).lcm(&(other.ram as i64)) as u32;
        let a = self.with_ram(&ctx, ram);
        let b = other.with_ram(&ctx, ram);
        PuiseuxSeries {
            dir: self.dir,
            ram,
            xs: a.mul(&ctx, &b),
            prec: self.prec.min(other.prec),
            leading_exact: None,
        }
        .normalized()
    }

    /// Integer power; negative exponents go through the reciprocal series
    /// (leading coefficient must be nonzero).
    pub fn powi(&self, n: i64) -> Self {
        let ctx = self.ctx();
        PuiseuxSeries {
            dir: self.dir,
            ram: self.ram,
            xs: self.xs.powi(&ctx, n),
            prec: self.prec,
            leading_exact: None,
        }
        .normalized()
    }

    /// Reduces the ramification when all nonzero coefficients sit on a
    /// coarser lattice.
    pub fn reduce_ram(mut self) -> Self {
        if self.ram == 1 {
            return self;
        }
        let mut g = self.xs.base.gcd(&(self.ram as i64));
        for (j, c) in self.xs.coeffs.iter().enumerate() {
            if !c.is_zero() {
                g = g.gcd(&(self.xs.base + j as i64));
            }
            if g == 1 {
                return self;
            }
        }
        let g = g.gcd(&(self.ram as i64));
        if g <= 1 {
            return self;
        }
        let new_len = self.xs.coeffs.len().div_ceil(g as usize);
        let mut coeffs = Vec::with_capacity(new_len);
        for j in 0..new_len {
            coeffs.push(self.xs.coeffs[j * g as usize].clone());
        }
        self.xs = XSeries {
            base: self.xs.base / g,
            coeffs,
        };
        self.ram /= g as u32;
        self
    }

    /// `m`-th root (`m` may be negative: reciprocal roots).  The leading
    /// coefficient must be positive; the result's type is
    /// `(a/m, lead^{1/m})` with the positive real root.
    pub fn root(&self, m: i64) -> Result<Self, PuiseuxError> {
        assert!(m != 0);
        if self.xs.coeffs.is_empty() {
            return Err(PuiseuxError::ZeroSeries);
        }
        let ctx = self.ctx();
        if !self.xs.leading().is_positive() {
            return Err(PuiseuxError::NonPositiveLeading);
        }
        let alpha = Rational::new(BigInt::one(), BigInt::from(m));
        let unit = self.xs.unit_power(&ctx, &alpha);
        // new base exponent: (base/ram) / m
        let base_exp = Rational::new(
            BigInt::from(self.xs.base),
            BigInt::from(self.ram) * BigInt::from(m),
        );
        let new_ram = base_exp.denom().to_i64().unwrap().lcm(&(self.ram as i64)) as u32;
        // leading^(1/m): sign handled above
        let lead_root = {
            let l = self.xs.leading();
            let r = ctx.nth_root(&l.abs(), m.unsigned_abs() as u32);
            if m < 0 {
                ctx.recip(&r)
            } else {
                r
            }
        };
        // place unit coefficients on the new lattice: steps of 1/self.ram
        let step = (new_ram / self.ram) as usize;
        let base_idx = (&base_exp * Rational::from(BigInt::from(new_ram)))
            .to_integer()
            .to_i64()
            .unwrap();
        let mut coeffs = vec![ctx.zero(); (unit.len() - 1) * step + 1];
        for (k, c) in unit.iter().enumerate() {
            coeffs[k * step] = ctx.mul(c, &lead_root);
        }
        Ok(PuiseuxSeries {
            dir: self.dir,
            ram: new_ram,
            xs: XSeries {
                base: base_idx,
                coeffs,
            },
            prec: self.prec,
            leading_exact: None,
        })
    }

    /// Compositional inverse of a type (1,1) power series.
    pub fn invert(&self) -> Result<Self, PuiseuxError> {
        let reduced = self.clone().reduce_ram();
        if reduced.ram != 1 || reduced.xs.base != 1 {
            return Err(PuiseuxError::NotType11);
        }
        let ctx = reduced.ctx();
        let lead = reduced.xs.leading().clone();
        if !ctx.close_pow2(&lead, &ctx.one(), -(reduced.prec as i64) + 8) {
            return Err(PuiseuxError::NotType11);
        }
        // Normalize a leading coefficient that is 1 only to rounding error:
        // with Fn = F/c, the inverse is Gn(x/c).
        let fn_xs = XSeries {
            base: 1,
            coeffs: reduced
                .xs
                .coeffs
                .iter()
                .map(|v| ctx.div(v, &lead))
                .collect(),
        };
        let g = fn_xs.lagrange_invert(&ctx);
        let inv_lead = ctx.recip(&lead);
        let mut cpow = ctx.one();
        let mut coeffs = Vec::with_capacity(g.coeffs.len());
        for v in g.coeffs.iter() {
            cpow = ctx.mul(&cpow, &inv_lead);
            coeffs.push(ctx.mul(v, &cpow));
        }
        Ok(PuiseuxSeries {
            dir: reduced.dir,
            ram: 1,
            xs: XSeries { base: 1, coeffs },
            prec: reduced.prec,
            leading_exact: None,
        })
    }

    /// Composition `self(F)`.  `F` must have a positive leading exponent
    /// in its local variable; fractional exponents of `self` require a
    /// positive leading coefficient of `F`.
    pub fn compose(&self, f: &Self) -> Result<Self, PuiseuxError> {
        if f.xs.base <= 0 {
            return Err(PuiseuxError::ExponentClash);
        }
        let prec = self.prec.min(f.prec);
        let ctx = Ctx::new(prec);
        // inner root F^{1/ram_G} if needed
        let w0 = if self.ram == 1 {
            f.clone()
        } else {
            if !f.xs.leading().is_positive() {
                return Err(PuiseuxError::NonPositiveLeading);
            }
            f.root(self.ram as i64)?
        };
        let g_int = XSeries {
            base: self.xs.base,
            coeffs: self.xs.coeffs.clone(),
        };
        let out = g_int.compose(&ctx, &w0.xs);
        Ok(PuiseuxSeries {
            dir: f.dir,
            ram: w0.ram,
            xs: out,
            prec,
            leading_exact: None,
        }
        .normalized())
    }

    // ---- JSON ----

    pub fn to_json(&self) -> String {
        let ctx = self.ctx();
        let j = PuiseuxJson {
            schema: "puiseux/1".into(),
            direction: match self.dir {
                Direction::AtZero => "zero".into(),
                Direction::AtInfinity => "infinity".into(),
            },
            ramification: self.ram,
            base_exponent: format_rational(&self.exponent_in_u(0)),
            coeffs: self
                .xs
                .coeffs
                .iter()
                .map(|c| ctx.to_decimal_string(c))
                .collect(),
            truncation_exponent: format_rational(&match self.dir {
                Direction::AtZero => self.truncation_order(),
                Direction::AtInfinity => -self.truncation_order(),
            }),
            precision: self.prec,
        };
        serde_json::to_string(&j).expect("serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Self, String> {
        let j: PuiseuxJson = serde_json::from_str(s).map_err(|e| e.to_string())?;
        let dir = match j.direction.as_str() {
            "zero" => Direction::AtZero,
            "infinity" => Direction::AtInfinity,
            other => return Err(format!("bad direction {other:?}")),
        };
        let ctx = Ctx::new(j.precision.max(64));
        let base_u = crate::walk::parse_rational(&j.base_exponent)
            .ok_or_else(|| format!("bad base exponent {:?}", j.base_exponent))?;
        let base_local = match dir {
            Direction::AtZero => base_u,
            Direction::AtInfinity => -base_u,
        };
        let idx = base_local * Rational::from(BigInt::from(j.ramification));
        if !idx.is_integer() {
            return Err("base exponent off the ramification lattice".into());
        }
        let mut coeffs = Vec::with_capacity(j.coeffs.len());
        for c in &j.coeffs {
            coeffs.push(
                ctx.parse_decimal(c)
                    .ok_or_else(|| format!("bad coefficient {c:?}"))?,
            );
        }
        if coeffs.is_empty() {
            return Err("empty coefficient list".into());
        }
        Ok(PuiseuxSeries {
            dir,
            ram: j.ramification,
            xs: XSeries {
                base: idx.to_integer().to_i64().ok_or("base out of range")?,
                coeffs,
            },
            prec: j.precision.max(64),
            leading_exact: None,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PuiseuxJson {
    #[serde(default)]
    schema: String,
    direction: String,
    ramification: u32,
    base_exponent: String,
    coeffs: Vec<String>,
    truncation_exponent: String,
    precision: u32,
}

/// The two gamma branch series at infinity.
#[derive(Clone, Debug)]
pub struct BranchPair {
    /// leading term `(1/f) u^{-1}`; exponents on the `1/f` lattice
    pub gamma_plus: PuiseuxSeries,
    /// leading term `-(1/e) u^{-1}`; exponents on the `1/e` lattice
    pub gamma_minus: PuiseuxSeries,
}

// ---------------------------------------------------------------------------
// branch construction
// ---------------------------------------------------------------------------

/// Laurent data for branch solving: exact coefficients at integer exponents
/// `-deg ..= top`, with a positive coefficient at `-deg`.
pub(crate) struct BranchData {
    pub coeffs: Vec<(i64, Real)>,
    pub deg: u32,
}

impl BranchData {
    /// `chi - 1` for a shape, oriented so the governing end is `-deg`.
    fn from_shape(ctx: &Ctx, shape: &WalkShape, reflected: bool) -> Self {
        let mut coeffs = Vec::new();
        for (k, v) in shape.coeffs() {
            let kk = if reflected { -k } else { *k };
            coeffs.push((kk, ctx.from_rational(v)));
        }
        // subtract 1 at exponent 0
        let mut found = false;
        for (k, c) in coeffs.iter_mut() {
            if *k == 0 {
                *c = ctx.sub(c, &ctx.one());
                found = true;
            }
        }
        if !found {
            coeffs.push((0, ctx.neg(&ctx.one())));
        }
        let deg = if reflected { shape.f() } else { shape.e() };
        BranchData { coeffs, deg }
    }
}

/// Solves `data(alpha(u)) = u` for the branch with `alpha -> 0` as
/// `u -> +infinity`, returning `alpha` as an ascending series in
/// `x = u^{-1/deg}` (integer lattice of `x`, base 1).
///
/// Route: `T = data^{-1/deg}` is of type `(1, lead^{-1/deg})`; normalizing
/// to type (1,1), Lagrange inversion gives `y` with `T(y) = x`, i.e.
/// `data(y) = x^{-deg} = u`.
fn alpha_x_series(ctx: &Ctx, data: &BranchData, terms: usize) -> Result<XSeries, PuiseuxError> {
    let deg = data.deg as i64;
    let min_k = data.coeffs.iter().map(|(k, _)| *k).min().unwrap();
    assert_eq!(min_k, -deg, "data must reach exponent -deg");
    let max_k = data.coeffs.iter().map(|(k, _)| *k).max().unwrap();
    // dense window -deg ..= max_k, padded to the working order
    let len = ((max_k + deg) as usize + 1).max(terms + deg as usize + 2);
    let mut coeffs = vec![ctx.zero(); len];
    for (k, c) in &data.coeffs {
        coeffs[(k + deg) as usize] = c.clone();
    }
    let s = XSeries { base: -deg, coeffs };
    if !s.leading().is_positive() {
        return Err(PuiseuxError::NonPositiveLeading);
    }
    // T = S^{-1/deg}: type (1, lead^{-1/deg})
    let unit = s.unit_power(ctx, &Rational::new(BigInt::from(-1), BigInt::from(deg)));
    let lead_root = ctx.recip(&ctx.nth_root(s.leading(), deg as u32));
    let t = XSeries {
        base: 1,
        coeffs: unit.iter().map(|c| ctx.mul(c, &lead_root)).collect(),
    };
    // normalize to type (1,1): T = lead_root * x * (...); Tn(y) = T(y)/lead_root
    let tn = XSeries {
        base: 1,
        coeffs: t.coeffs.iter().map(|c| ctx.div(c, &lead_root)).collect(),
    };
    let g = tn.lagrange_invert(ctx);
    // alpha(x) = G(x / lead_root): scale composition, c = 1/lead_root
    let c = ctx.recip(&lead_root);
    let mut cpow = ctx.one();
    let mut coeffs = Vec::with_capacity(g.coeffs.len());
    for coeff in g.coeffs.iter() {
        cpow = ctx.mul(&cpow, &c);
        coeffs.push(ctx.mul(coeff, &cpow));
    }
    Ok(XSeries { base: 1, coeffs })
}

/// `gamma = 1/(sum_k k data_k alpha^k)` as an ascending series in
/// `x = u^{-1/deg}`; leading term `-(1/deg) x^{deg}`.
pub(crate) fn gamma_x_series(
    ctx: &Ctx,
    data: &BranchData,
    terms: usize,
) -> Result<XSeries, PuiseuxError> {
    let alpha = alpha_x_series(ctx, data, terms + 2 * data.deg as usize + 2)?;
    // W(alpha) with W = t d(data)/dt = sum k*coeff_k t^k; the constant term
    // of data drops out.
    let deg = data.deg as i64;
    let mut acc: Option<XSeries> = None;
    // alpha^k for k in the support, computed incrementally
    let alpha_inv = alpha.recip(ctx);
    let mut pow_cache: std::collections::BTreeMap<i64, XSeries> = std::collections::BTreeMap::new();
    for (k, c) in &data.coeffs {
        if *k == 0 {
            continue;
        }
        let p = pow_cache
            .entry(*k)
            .or_insert_with(|| {
                if *k > 0 {
                    alpha.powi(ctx, *k)
                } else {
                    alpha_inv.powi(ctx, -*k)
                }
            })
            .clone();
        let kc = ctx.mul(c, &ctx.from_i64(*k));
        let term = p.scale(ctx, &kc);
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(ctx, &term),
        });
    }
    let w = acc.expect("nonempty support");
    debug_assert_eq!(w.base, -deg);
    let gamma = w.recip(ctx);
    debug_assert_eq!(gamma.base, deg);
    Ok(gamma)
}

/// Both inverse branches of `chi(alpha) = 1 + u` at `u = infinity`.
///
/// `alpha_minus` tends to 0 (series in `u^{-1/e}`, leading
/// `kappa_{-e}^{1/e} u^{-1/e}`); `alpha_plus` tends to infinity (series
/// with leading `kappa_f^{-1/f} u^{1/f}`).
pub fn alpha_branches(
    shape: &WalkShape,
    order: u32,
    precision: u32,
) -> (PuiseuxSeries, PuiseuxSeries) {
    assert!(order >= 1);
    let ctx = Ctx::new(precision + 32);
    let terms = order as usize + 2;
    // minus branch: chi - 1 as-is
    let data = BranchData::from_shape(&ctx, shape, false);
    let e = data.deg;
    let xs = alpha_x_series(&ctx, &data, terms).expect("kappa_{-e} > 0");
    let minus = wrap_at_infinity(xs, e, precision, order as i64 + 1);
    // plus branch: reflected data, then reciprocal
    let data = BranchData::from_shape(&ctx, shape, true);
    let f = data.deg;
    let xs = alpha_x_series(&ctx, &data, terms).expect("kappa_f > 0");
    let xs = xs.recip(&ctx);
    let plus = wrap_at_infinity(xs, f, precision, order as i64 + 1);
    (minus, plus)
}

/// Wraps an x-space series (`x = u^{-1/deg}`) as a series at infinity with
/// ramification `deg`, truncated to `keep` coefficients.
fn wrap_at_infinity(mut xs: XSeries, deg: u32, precision: u32, keep: i64) -> PuiseuxSeries {
    let keep = keep.max(1) as usize;
    if xs.coeffs.len() > keep {
        xs.coeffs.truncate(keep);
    }
    let mut out = PuiseuxSeries {
        dir: Direction::AtInfinity,
        ram: deg,
        xs,
        prec: precision,
        leading_exact: None,
    };
    out.xs.coeffs.iter_mut().for_each(|c| {
        let _ = c.set_precision(precision as usize, astro_float::RoundingMode::ToEven);
    });
    out.normalized()
}

/// The two `gamma` branch series at infinity, with exact leading
/// coefficients `1/f` and `-1/e` pinned by type algebra.
pub fn gamma_branches(shape: &WalkShape, order: u32, precision: u32) -> BranchPair {
    assert!(order >= 1);
    let ctx = Ctx::new(precision + 48);
    let terms = order as usize + 2;
    let data = BranchData::from_shape(&ctx, shape, false);
    let e = data.deg;
    let xs = gamma_x_series(&ctx, &data, terms).expect("kappa_{-e} > 0");
    // x-series with base e: x^{e+j} reads as u^{-1-j/e}
    let minus = wrap_at_infinity(xs, e, precision, order as i64 + 1)
        .with_leading_exact(-Rational::new(BigInt::one(), BigInt::from(e)));

    let data = BranchData::from_shape(&ctx, shape, true);
    let f = data.deg;
    let xs = gamma_x_series(&ctx, &data, terms).expect("kappa_f > 0");
    let plus = wrap_at_infinity(xs.neg(), f, precision, order as i64 + 1);
    let plus = plus.with_leading_exact(Rational::new(BigInt::one(), BigInt::from(f)));

    BranchPair {
        gamma_plus: plus,
        gamma_minus: minus,
    }
}

/// `gamma_plus - gamma_minus` at infinity, merged onto the `lcm(e, f)`
/// lattice.  Exponents representable in both branch lattices (the integer
/// exponents when `gcd(e,f) = 1`) carry mixed contributions; the
/// `u^{-1}` coefficient is pinned to the exact rational `1/e + 1/f`.
pub fn gamma_diff_at_infinity(shape: &WalkShape, order: u32, precision: u32) -> PuiseuxSeries {
    let pair = gamma_branches(shape, order, precision);
    let diff = pair.gamma_plus.sub(&pair.gamma_minus);
    let e = shape.e() as i64;
    let f = shape.f() as i64;
    let lead = Rational::new(BigInt::one(), BigInt::from(e))
        + Rational::new(BigInt::one(), BigInt::from(f));
    diff.with_leading_exact(lead)
}

/// `gamma_plus - gamma_minus` expanded at `u = 0` on the `u^{1/2}` lattice,
/// with leading term `sqrt(2/J_2) u^{-1/2}`.
///
/// Both sign branches come from one square-root series: with
/// `Q(y) = chi(e^y) - 1 = (J_2/2) y^2 + ...` and `W = Q^{1/2}`, the branch
/// inversions are `y_± = W^{-1}(± u^{1/2})`, and the result is
/// `1/Q'(y_+) - 1/Q'(y_-)`, composed separately for each sign so the
/// cancellation of integer exponents is a genuine numerical check.
pub fn gamma_diff_at_zero(
    shape: &WalkShape,
    order: u32,
    precision: u32,
) -> Result<PuiseuxSeries, PuiseuxError> {
    if !shape.unbiased() {
        return Err(PuiseuxError::Biased);
    }
    let ctx = Ctx::new(precision + 48);
    let kmax = 2 * order + 8;
    let moments = shape.moments(kmax);
    // Q(y) = sum_{n>=2} J_n y^n / n!
    let mut qc = Vec::with_capacity((kmax - 1) as usize);
    let mut fact = Rational::from(BigInt::from(2));
    for n in 2..=kmax {
        if n > 2 {
            fact *= Rational::from(BigInt::from(n));
        }
        qc.push(ctx.from_rational(&(moments.j(n) / &fact)));
    }
    let q = XSeries {
        base: 2,
        coeffs: qc,
    };
    // W = Q^{1/2}: type (1, sqrt(J2/2))
    let unit = q.unit_power(&ctx, &Rational::new(BigInt::one(), BigInt::from(2)));
    let lead = ctx.sqrt(q.leading());
    let w = XSeries {
        base: 1,
        coeffs: unit.iter().map(|c| ctx.mul(c, &lead)).collect(),
    };
    // normalize, invert, rescale: y(v) = G(v / lead)
    let wn = XSeries {
        base: 1,
        coeffs: w.coeffs.iter().map(|c| ctx.div(c, &lead)).collect(),
    };
    let g = wn.lagrange_invert(&ctx);
    let inv_lead = ctx.recip(&lead);
    let mut cpow = ctx.one();
    let mut yc = Vec::with_capacity(g.coeffs.len());
    for coeff in g.coeffs.iter() {
        cpow = ctx.mul(&cpow, &inv_lead);
        yc.push(ctx.mul(coeff, &cpow));
    }
    let y_plus = XSeries {
        base: 1,
        coeffs: yc,
    };
    let y_minus = y_plus.flip_sign(&ctx);
    // P = 1/Q'
    let p = q.derivative(&ctx).recip(&ctx);
    let t_plus = p.compose(&ctx, &y_plus);
    let t_minus = p.compose(&ctx, &y_minus);
    let diff = t_plus.sub(&ctx, &t_minus);
    // wrap: v = u^{1/2}
    let keep = (2 * order + 2) as usize;
    let mut xs = diff;
    if xs.coeffs.len() > keep {
        xs.coeffs.truncate(keep);
    }
    xs.coeffs.iter_mut().for_each(|c| {
        let _ = c.set_precision(precision as usize, astro_float::RoundingMode::ToEven);
    });
    Ok(PuiseuxSeries {
        dir: Direction::AtZero,
        ram: 2,
        xs,
        prec: precision,
        leading_exact: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{lazy_walk, rat, simple_walk, WalkShape};

    fn ctx256() -> Ctx {
        Ctx::new(256)
    }

    fn series_at_zero(ctx: &Ctx, base: i64, vals: &[f64]) -> PuiseuxSeries {
        PuiseuxSeries::from_coeffs(
            Direction::AtZero,
            1,
            base,
            vals.iter().map(|&v| ctx.from_f64(v)).collect(),
            ctx.prec(),
        )
    }

    #[test]
    fn root_binomial_series() {
        let ctx = ctx256();
        // (1 + t)^{1/2} = 1 + t/2 - t^2/8 + t^3/16 - ...
        let mut coeffs = vec![ctx.one(), ctx.one()];
        coeffs.extend(std::iter::repeat_with(|| ctx.zero()).take(4));
        let f = PuiseuxSeries::from_coeffs(Direction::AtZero, 1, 0, coeffs, 256);
        let r = f.root(2).unwrap();
        let expect = [1.0, 0.5, -0.125, 0.0625, -0.0390625];
        for (j, &e) in expect.iter().enumerate() {
            assert!(
                ctx.close_pow2(&r.coeffs()[j], &ctx.from_f64(e), -240),
                "coefficient {j}"
            );
        }
    }

    #[test]
    fn root_of_monomial_and_reciprocal() {
        let ctx = ctx256();
        // (4 t^2)^{1/2} = 2 t
        let f = series_at_zero(&ctx, 2, &[4.0]);
        let r = f.root(2).unwrap();
        assert_eq!(r.base_exponent(), rat(1, 1));
        assert!(ctx.close_pow2(&r.coeffs()[0], &ctx.from_i64(2), -240));

        // (t^{-1} (1 + 2t))^{-1} = t (1 - 2t + 4t^2 - ...)
        let f = series_at_zero(&ctx, -1, &[1.0, 2.0, 0.0, 0.0, 0.0]);
        let r = f.root(-1).unwrap();
        assert_eq!(r.base_exponent(), rat(1, 1));
        let expect = [1.0, -2.0, 4.0, -8.0];
        for (j, &e) in expect.iter().enumerate() {
            assert!(ctx.close_pow2(&r.coeffs()[j], &ctx.from_f64(e), -230));
        }
    }

    #[test]
    fn root_requires_positive_leading() {
        let ctx = ctx256();
        let f = series_at_zero(&ctx, 0, &[-1.0, 1.0]);
        assert_eq!(f.root(2).unwrap_err(), PuiseuxError::NonPositiveLeading);
    }

    #[test]
    fn invert_geometric_series() {
        let ctx = ctx256();
        // F = t/(1-t) = t + t^2 + ... ; inverse is t/(1+t) = t - t^2 + t^3 - ...
        let f = series_at_zero(&ctx, 1, &[1.0; 8]);
        let g = f.invert().unwrap();
        for j in 0..7 {
            let expect = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert!(
                ctx.close_pow2(&g.coeffs()[j], &ctx.from_f64(expect), -240),
                "coefficient {j}"
            );
        }
        // identity inverts to itself
        let ident = series_at_zero(&ctx, 1, &[1.0, 0.0, 0.0]);
        let g = ident.invert().unwrap();
        assert!(ctx.close_pow2(&g.coeffs()[0], &ctx.one(), -250));
        assert!(g.coeffs()[1].is_zero() || ctx.close_pow2(&g.coeffs()[1], &ctx.zero(), -250));
    }

    #[test]
    fn invert_catalan_signs() {
        let ctx = ctx256();
        // F = t + t^2: inverse t - t^2 + 2t^3 - 5t^4 + 14 t^5 (Catalan numbers)
        let f = series_at_zero(&ctx, 1, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let g = f.invert().unwrap();
        let expect = [1.0, -1.0, 2.0, -5.0, 14.0];
        for (j, &e) in expect.iter().enumerate() {
            assert!(
                ctx.close_pow2(&g.coeffs()[j], &ctx.from_f64(e), -230),
                "coefficient {j}: {}",
                ctx.to_f64(&g.coeffs()[j])
            );
        }
    }

    #[test]
    fn invert_rejects_wrong_type() {
        let ctx = ctx256();
        let f = series_at_zero(&ctx, 0, &[1.0, 1.0]);
        assert_eq!(f.invert().unwrap_err(), PuiseuxError::NotType11);
        let f = series_at_zero(&ctx, 1, &[2.0, 1.0]);
        assert_eq!(f.invert().unwrap_err(), PuiseuxError::NotType11);
    }

    #[test]
    fn invert_compose_roundtrip() {
        let ctx = ctx256();
        let f = series_at_zero(&ctx, 1, &[1.0, 0.3, -0.2, 0.11, 0.07, -0.05]);
        let g = f.invert().unwrap();
        let id = g.compose(&f).unwrap();
        assert_eq!(id.base_exponent(), rat(1, 1));
        assert!(ctx.close_pow2(&id.coeffs()[0], &ctx.one(), -240));
        for j in 1..id.coeffs().len().min(5) {
            assert!(
                ctx.close_pow2(&id.coeffs()[j], &ctx.zero(), -230),
                "residue at order {}: {}",
                j + 1,
                ctx.to_f64(&id.coeffs()[j])
            );
        }
    }

    #[test]
    fn compose_examples() {
        let ctx = ctx256();
        // G = t^2, F = 2t -> 4 t^2
        let g = series_at_zero(&ctx, 2, &[1.0]);
        let f = series_at_zero(&ctx, 1, &[2.0]);
        let c = g.compose(&f).unwrap();
        assert_eq!(c.base_exponent(), rat(2, 1));
        assert!(ctx.close_pow2(&c.coeffs()[0], &ctx.from_i64(4), -240));

        // G = t + t^3, F = t - t^2 -> t - t^2 + t^3 - 3t^4 + ...
        let g = series_at_zero(&ctx, 1, &[1.0, 0.0, 1.0, 0.0, 0.0]);
        let f = series_at_zero(&ctx, 1, &[1.0, -1.0, 0.0, 0.0, 0.0]);
        let c = g.compose(&f).unwrap();
        let expect = [1.0, -1.0, 1.0, -3.0];
        for (j, &e) in expect.iter().enumerate() {
            assert!(
                ctx.close_pow2(&c.coeffs()[j], &ctx.from_f64(e), -230),
                "coefficient {j}: {}",
                ctx.to_f64(&c.coeffs()[j])
            );
        }

        // type arithmetic: leading coefficient of G(F) is d * b^c
        let g = series_at_zero(&ctx, 1, &[3.0, 0.0, 0.0]);
        let f = series_at_zero(&ctx, 1, &[0.5, 0.0, 0.0]);
        let c = g.compose(&f).unwrap();
        assert!(ctx.close_pow2(&c.coeffs()[0], &ctx.from_f64(1.5), -240));
    }

    #[test]
    fn alpha_branches_simple_walk() {
        // closed forms: alpha_{+-} = 1 + u ± sqrt(u^2 + 2u)
        let ctx = ctx256();
        let (minus, plus) = alpha_branches(&simple_walk(), 6, 256);
        // alpha_plus = 2u + ... leading coefficient 2 at u^{+1}
        assert_eq!(plus.exponent_in_u(0), rat(1, 1));
        assert!(ctx.close_pow2(&plus.coeffs()[0], &ctx.from_i64(2), -200));
        // alpha_minus leading: (1/2) u^{-1}
        assert_eq!(minus.exponent_in_u(0), rat(-1, 1));
        assert!(ctx.close_pow2(&minus.coeffs()[0], &ctx.from_f64(0.5), -200));
        // numeric check at u = 50: chi(alpha) = 1 + u
        for branch in [&minus, &plus] {
            let u = 50.0f64;
            let mut val = 0.0;
            for (j, c) in branch.coeffs().iter().enumerate() {
                let ex = branch.exponent_in_u(j);
                let exf = ex.numer().to_i64().unwrap() as f64 / ex.denom().to_i64().unwrap() as f64;
                val += ctx.to_f64(c) * u.powf(exf);
            }
            let exact_plus = 1.0 + u + (u * u + 2.0 * u).sqrt();
            let exact_minus = 1.0 + u - (u * u + 2.0 * u).sqrt();
            let target = if matches!(branch.exponent_in_u(0).numer().to_i64(), Some(1)) {
                exact_plus
            } else {
                exact_minus
            };
            assert!(
                (val - target).abs() / target.abs() < 1e-6,
                "branch value {val} vs {target}"
            );
        }
    }

    #[test]
    fn alpha_leading_terms_asymmetric() {
        let ctx = ctx256();
        let shape = WalkShape::from_pairs(&[(-1, rat(2, 3)), (2, rat(1, 3))], true).unwrap();
        let (minus, plus) = alpha_branches(&shape, 4, 256);
        // alpha_minus ~ kappa_{-e}^{1/e} u^{-1/e} = (2/3) u^{-1}
        assert_eq!(minus.exponent_in_u(0), rat(-1, 1));
        assert!(ctx.close_pow2(&minus.coeffs()[0], &ctx.from_rational(&rat(2, 3)), -200));
        // alpha_plus ~ kappa_f^{-1/f} u^{1/f} = 3^{1/2} u^{1/2}
        assert_eq!(plus.exponent_in_u(0), rat(1, 2));
        let sqrt3 = ctx.sqrt(&ctx.from_i64(3));
        assert!(ctx.close_pow2(&plus.coeffs()[0], &sqrt3, -200));
    }

    #[test]
    fn gamma_branches_simple_walk_closed_form() {
        // gamma_plus = (u^2+2u)^{-1/2} = u^{-1} - u^{-2} + (3/2) u^{-3} - (5/2) u^{-4} ...
        let ctx = ctx256();
        let pair = gamma_branches(&simple_walk(), 5, 256);
        let expect = [1.0, -1.0, 1.5, -2.5, 4.375];
        for (j, &e) in expect.iter().enumerate() {
            assert!(
                ctx.close_pow2(&pair.gamma_plus.coeffs()[j], &ctx.from_f64(e), -200),
                "gamma_plus coefficient {j}: {}",
                ctx.to_f64(&pair.gamma_plus.coeffs()[j])
            );
            assert!(
                ctx.close_pow2(&pair.gamma_minus.coeffs()[j], &ctx.from_f64(-e), -200),
                "gamma_minus coefficient {j}"
            );
        }
        assert_eq!(pair.gamma_plus.leading_exact().unwrap(), &rat(1, 1));
        assert_eq!(pair.gamma_minus.leading_exact().unwrap(), &rat(-1, 1));
    }

    #[test]
    fn gamma_leading_is_exact_rational() {
        for (e, f, coeffs) in [
            (1u32, 2u32, vec![(-1i64, rat(2, 3)), (2, rat(1, 3))]),
            (
                2,
                3,
                vec![
                    (-2, rat(3, 10)),
                    (-1, rat(1, 10)),
                    (1, rat(1, 10)),
                    (3, rat(1, 2)),
                ],
            ),
        ] {
            let shape = WalkShape::from_pairs(&coeffs, false).unwrap();
            let pair = gamma_branches(&shape, 3, 192);
            assert_eq!(
                pair.gamma_plus.leading_exact().unwrap(),
                &Rational::new(BigInt::one(), BigInt::from(f)),
            );
            assert_eq!(
                pair.gamma_minus.leading_exact().unwrap(),
                &-Rational::new(BigInt::one(), BigInt::from(e)),
            );
            assert_eq!(pair.gamma_plus.exponent_in_u(0), rat(-1, 1));
            assert_eq!(pair.gamma_minus.exponent_in_u(0), rat(-1, 1));
        }
    }

    #[test]
    fn gamma_diff_simple_walk() {
        // 2(u^2+2u)^{-1/2} = 2u^{-1} - 2u^{-2} + 3u^{-3} - 5u^{-4} + ...
        let ctx = ctx256();
        let diff = gamma_diff_at_infinity(&simple_walk(), 5, 256);
        assert_eq!(diff.leading_exact().unwrap(), &rat(2, 1));
        let expect = [2.0, -2.0, 3.0, -5.0];
        for (j, &e) in expect.iter().enumerate() {
            assert!(
                ctx.close_pow2(&diff.coeffs()[j], &ctx.from_f64(e), -200),
                "diff coefficient {j}: {}",
                ctx.to_f64(&diff.coeffs()[j])
            );
        }
    }

    #[test]
    fn gamma_diff_leading_law() {
        let shape = WalkShape::from_pairs(&[(-1, rat(2, 3)), (2, rat(1, 3))], true).unwrap();
        let diff = gamma_diff_at_infinity(&shape, 4, 192);
        assert_eq!(diff.leading_exact().unwrap(), &rat(3, 2));
        let lazy = gamma_diff_at_infinity(&lazy_walk(), 4, 192);
        assert_eq!(lazy.leading_exact().unwrap(), &rat(2, 1));
    }

    #[test]
    fn gamma_diff_at_zero_simple_walk() {
        // closed form 2(u^2+2u)^{-1/2} at 0: sqrt2 u^{-1/2} - (sqrt2/4) u^{1/2}
        //   + (3 sqrt2 / 32) u^{3/2} - ...
        let ctx = ctx256();
        let diff = gamma_diff_at_zero(&simple_walk(), 3, 256).unwrap();
        assert_eq!(diff.exponent_in_u(0), rat(-1, 2));
        let sqrt2 = ctx.sqrt(&ctx.from_i64(2));
        assert!(ctx.close_pow2(&diff.coeffs()[0], &sqrt2, -200));
        // u^{1/2} coefficient: index of exponent 1/2 relative to -1/2 is 2
        let c1 = diff.coefficient_at_u(&rat(1, 2)).unwrap();
        let expect = ctx.div(&sqrt2.neg(), &ctx.from_i64(4));
        assert!(ctx.close_pow2(c1, &expect, -200));
        let c2 = diff.coefficient_at_u(&rat(3, 2)).unwrap();
        let expect = ctx.div(&ctx.mul(&ctx.from_i64(3), &sqrt2), &ctx.from_i64(32));
        assert!(ctx.close_pow2(c2, &expect, -200));
        // integer exponents cancel numerically
        for q in [0i64, 1] {
            let c = diff.coefficient_at_u(&rat(q, 1)).unwrap();
            assert!(
                ctx.lt(&c.abs(), &ctx.pow2(-200)),
                "integer exponent u^{q} coefficient did not cancel: {}",
                ctx.to_f64(c)
            );
        }
    }

    #[test]
    fn gamma_diff_at_zero_leading_coefficient_law() {
        // leading coefficient is sqrt(2/J_2)
        let ctx = ctx256();
        for shape in [
            lazy_walk(),
            WalkShape::from_pairs(&[(-1, rat(2, 3)), (2, rat(1, 3))], true).unwrap(),
        ] {
            let diff = gamma_diff_at_zero(&shape, 2, 256).unwrap();
            let j2 = ctx.from_rational(shape.moments(2).j(2));
            let expect = ctx.sqrt(&ctx.div(&ctx.from_i64(2), &j2));
            assert!(
                ctx.close_pow2(&diff.coeffs()[0], &expect, -200),
                "leading {} vs {}",
                ctx.to_f64(&diff.coeffs()[0]),
                ctx.to_f64(&expect)
            );
        }
    }

    #[test]
    fn gamma_diff_at_zero_rejects_biased() {
        let b = WalkShape::from_pairs(&[(-1, rat(3, 7)), (2, rat(4, 7))], false).unwrap();
        assert_eq!(
            gamma_diff_at_zero(&b, 2, 128).unwrap_err(),
            PuiseuxError::Biased
        );
    }

    #[test]
    fn json_roundtrip() {
        let diff = gamma_diff_at_infinity(&simple_walk(), 4, 128);
        let j = diff.to_json();
        assert!(j.contains("\"direction\":\"infinity\""));
        let back = PuiseuxSeries::from_json_str(&j).unwrap();
        assert_eq!(back.ramification(), diff.ramification());
        assert_eq!(back.exponent_in_u(0), diff.exponent_in_u(0));
        let ctx = Ctx::new(128);
        for (a, b) in diff.coeffs().iter().zip(back.coeffs()) {
            assert!(ctx.close_pow2(a, b, -100));
        }
    }
}
