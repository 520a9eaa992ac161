//! Exact spectra (return probabilities), isospectrality testing, Monte Carlo
//! estimators, and the `U(1)` invariant-dimension counts.
//!
//! `I_n` is the constant coefficient of `chi(t)^n`, computed by iterated
//! Laurent-polynomial convolution over exact rationals.  Powers `chi^n`
//! only ever occupy exponents in `[-n e, n f]`, so no truncation is
//! involved.

use crate::walk::{format_rational, parse_rational, Rational, WalkShape};
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact return probabilities `I_1 .. I_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spectrum {
    values: Vec<Rational>,
}

impl Spectrum {
    pub fn from_values(values: Vec<Rational>) -> Self {
        Spectrum { values }
    }

    /// First index is always 1.
    pub fn start(&self) -> u32 {
        1
    }

    /// `I_n`, 1-based.
    pub fn i(&self, n: usize) -> &Rational {
        &self.values[n - 1]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SpectrumJson {
            schema: "spectrum/1".into(),
            start: 1,
            values: self.values.iter().map(format_rational).collect(),
        })
        .expect("serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Self, String> {
        let j: SpectrumJson = serde_json::from_str(s).map_err(|e| e.to_string())?;
        if j.start != 1 {
            return Err(format!("spectrum must start at 1, got {}", j.start));
        }
        let mut values = Vec::with_capacity(j.values.len());
        for v in &j.values {
            let r = parse_rational(v).ok_or_else(|| format!("bad rational {v:?}"))?;
            if r.is_negative() || r > Rational::one() {
                return Err(format!("return probability {v} outside [0, 1]"));
            }
            values.push(r);
        }
        Ok(Spectrum { values })
    }
}

#[derive(Serialize, Deserialize)]
struct SpectrumJson {
    #[serde(default = "default_schema")]
    schema: String,
    start: u32,
    values: Vec<String>,
}

fn default_schema() -> String {
    "spectrum/1".into()
}

/// Dense coefficient window of `chi^n`, exponents `offset ..= offset+len-1`.
#[derive(Clone, Debug)]
pub(crate) struct LaurentWindow {
    pub offset: i64,
    pub coeffs: Vec<Rational>,
}

impl LaurentWindow {
    pub fn unit() -> Self {
        LaurentWindow {
            offset: 0,
            coeffs: vec![Rational::one()],
        }
    }

    pub fn coeff(&self, k: i64) -> Rational {
        let idx = k - self.offset;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Rational::zero()
        } else {
            self.coeffs[idx as usize].clone()
        }
    }
}

/// Multiplies a window by the shape, exactly.
pub(crate) fn convolve(win: &LaurentWindow, shape: &WalkShape) -> LaurentWindow {
    let e = shape.e() as i64;
    let f = shape.f() as i64;
    let offset = win.offset - e;
    let len = win.coeffs.len() + (e + f) as usize;
    let mut out = vec![Rational::zero(); len];
    for (i, c) in win.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for (k, v) in shape.coeffs() {
            let j = i as i64 + (k + e);
            out[j as usize] += c * v;
        }
    }
    LaurentWindow {
        offset,
        coeffs: out,
    }
}

/// Exact `I_1 .. I_N` by iterated convolution.
pub fn return_probabilities(shape: &WalkShape, n: usize) -> Spectrum {
    assert!(n >= 1);
    let mut win = LaurentWindow::unit();
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        win = convolve(&win, shape);
        values.push(win.coeff(0));
    }
    Spectrum { values }
}

/// Outcome of an exact spectrum comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpectrumCmp {
    Equal,
    FirstDifference { n: usize, a: Rational, b: Rational },
}

/// Compares the spectra of two shapes through `N`, exactly.
pub fn isospectral_through(a: &WalkShape, b: &WalkShape, n: usize) -> SpectrumCmp {
    let sa = return_probabilities(a, n);
    let sb = return_probabilities(b, n);
    for k in 1..=n {
        if sa.i(k) != sb.i(k) {
            return SpectrumCmp::FirstDifference {
                n: k,
                a: sa.i(k).clone(),
                b: sb.i(k).clone(),
            };
        }
    }
    SpectrumCmp::Equal
}

/// Monte Carlo estimates of `I_1 .. I_N`.
///
/// Two estimators are produced from the same seed:
/// - `estimates`: direct relative frequency of `X_1 + ... + X_n = 0` over
///   independent trajectories (RNG stream 0);
/// - `s_statistic`: the ratio `|[1,T] ∩ S ∩ (n+S)| / |[1,T] ∩ S|` computed
///   from one long trajectory of `samples` steps, where `S` is the set of
///   return times (RNG stream 1).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmpiricalSpectrum {
    pub schema: String,
    pub samples: u64,
    pub seed: u64,
    pub estimates: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub s_statistic: Vec<f64>,
    pub s_statistic_returns: u64,
}

/// Exact sampler for the step distribution: integer weights over a common
/// denominator, one uniform draw per step.
struct StepSampler {
    steps: Vec<i64>,
    cumulative: Vec<u64>,
    total: u64,
}

impl StepSampler {
    fn new(shape: &WalkShape) -> Self {
        let mut den = BigInt::one();
        for v in shape.coeffs().values() {
            den = den.lcm(v.denom());
        }
        let mut steps = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc: u64 = 0;
        for (k, v) in shape.coeffs() {
            let w = (v * Rational::from(den.clone()))
                .to_integer()
                .to_u64()
                .expect("weight fits u64");
            acc += w;
            steps.push(*k);
            cumulative.push(acc);
        }
        StepSampler {
            steps,
            cumulative,
            total: acc,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R, dist: &Uniform<u64>) -> i64 {
        let u = dist.sample(rng);
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.steps[idx]
    }

    fn uniform(&self) -> Uniform<u64> {
        Uniform::new(0, self.total)
    }
}

/// Deterministic Monte Carlo estimation; identical seeds give identical
/// output.
pub fn simulate(shape: &WalkShape, n: usize, samples: u64, seed: u64) -> EmpiricalSpectrum {
    assert!(samples >= 1);
    let sampler = StepSampler::new(shape);
    let dist = sampler.uniform();

    // Direct estimator (stream 0).
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut hits = vec![0u64; n];
    for _ in 0..samples {
        let mut pos: i64 = 0;
        for slot in hits.iter_mut().take(n) {
            pos += sampler.sample(&mut rng, &dist);
            if pos == 0 {
                *slot += 1;
            }
        }
    }
    let estimates: Vec<f64> = hits.iter().map(|&h| h as f64 / samples as f64).collect();
    let standard_errors: Vec<f64> = estimates
        .iter()
        .map(|&p| (p * (1.0 - p) / samples as f64).sqrt())
        .collect();

    // S-statistic from one long trajectory (stream 1).
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut pos: i64 = 0;
    let mut returns: Vec<u64> = Vec::new();
    for t in 1..=samples {
        pos += sampler.sample(&mut rng, &dist);
        if pos == 0 {
            returns.push(t);
        }
    }
    let mut s_statistic = vec![0.0; n];
    if !returns.is_empty() {
        use std::collections::HashSet;
        let set: HashSet<u64> = returns.iter().cloned().collect();
        for (i, slot) in s_statistic.iter_mut().enumerate() {
            let shift = (i + 1) as u64;
            let joint = returns
                .iter()
                .filter(|&&t| t > shift && set.contains(&(t - shift)))
                .count();
            *slot = joint as f64 / returns.len() as f64;
        }
    }

    EmpiricalSpectrum {
        schema: "empirical-spectrum/1".into(),
        samples,
        seed,
        estimates,
        standard_errors,
        s_statistic,
        s_statistic_returns: returns.len() as u64,
    }
}

/// `U(1)` invariant dimensions for a rational shape: `d` is the lcm of the
/// coefficient denominators and `dims[n-1] = d^n I_n`, an exact nonnegative
/// integer (the dimension of the invariant subspace of the `n`-th tensor
/// power of the weight-multiplicity representation).
pub fn u1_invariant_dims(shape: &WalkShape, n: usize) -> (BigInt, Vec<BigUint>) {
    let mut d = BigInt::one();
    for v in shape.coeffs().values() {
        d = d.lcm(v.denom());
    }
    let spec = return_probabilities(shape, n);
    let mut dims = Vec::with_capacity(n);
    let mut dpow = BigInt::one();
    for k in 1..=n {
        dpow *= &d;
        let v = spec.i(k) * Rational::from(dpow.clone());
        debug_assert!(v.is_integer(), "d^n I_n must be an integer");
        dims.push(v.to_integer().to_biguint().expect("nonnegative"));
    }
    (d, dims)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BiasError {
    #[error("need at least 8 spectrum values, got {0}")]
    InsufficientData(usize),
}

/// Evidence attached to a bias verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiasEvidence {
    pub s_grid: Vec<f64>,
    /// `sqrt(s) * L(s)` along the grid; flat for unbiased walks, decaying
    /// exponentially for biased ones.
    pub scaled_l: Vec<f64>,
    pub decay_ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum BiasVerdict {
    ConsistentWithUnbiased { evidence: BiasEvidence },
    SuggestsBiased { evidence: Option<BiasEvidence> },
}

/// Heuristic test of whether a spectrum is consistent with an unbiased
/// walk: `L(s) = e^{-s} sum I_n s^n / n!` decays like `s^{-1/2}` when the
/// underlying walk is unbiased but exponentially in `s` otherwise.  The
/// verdict compares `sqrt(s) L(s)` along a grid whose reach is limited by
/// the tail bound `s^{N+1}/(N+1)! < 2^{-30}` (valid since `|I_n| <= 1`).
/// Degenerate spectra (no usable signal) fold into `SuggestsBiased` with
/// empty evidence.
pub fn bias_diagnostic(spec: &Spectrum, _precision: u32) -> Result<BiasVerdict, BiasError> {
    let n = spec.len();
    if n < 8 {
        return Err(BiasError::InsufficientData(n));
    }
    // Largest s with a provably negligible truncation tail.
    let mut s_max = n as f64;
    while s_max > 1.0 {
        let m = (n + 1) as f64;
        let log_tail = m * s_max.ln() - (m * m.ln() - m) - s_max;
        if log_tail < -30.0 * std::f64::consts::LN_2 {
            break;
        }
        s_max *= 0.95;
    }
    if s_max <= 2.0 {
        return Ok(BiasVerdict::SuggestsBiased { evidence: None });
    }
    let s_grid: Vec<f64> = (0..4).map(|i| s_max * (1.0 + i as f64) / 4.0).collect();
    let mut scaled = Vec::new();
    for &s in &s_grid {
        let mut term = (-s).exp();
        let mut acc = term; // n = 0 term, I_0 = 1
        for k in 1..=n {
            term *= s / k as f64;
            acc += term * spec.i(k).to_f64().unwrap_or(0.0);
        }
        scaled.push(acc * s.sqrt());
    }
    let first = scaled[0];
    let last = *scaled.last().unwrap();
    if first <= 0.0 || last <= 0.0 {
        return Ok(BiasVerdict::SuggestsBiased { evidence: None });
    }
    let evidence = BiasEvidence {
        s_grid,
        scaled_l: scaled.clone(),
        decay_ratio: last / first,
    };
    if last / first > 0.75 {
        Ok(BiasVerdict::ConsistentWithUnbiased { evidence })
    } else {
        Ok(BiasVerdict::SuggestsBiased {
            evidence: Some(evidence),
        })
    }
}
