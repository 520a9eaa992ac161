//! Experiments on the moment map `(I_1, ..., I_N)` over the affine space
//! `X_{e,f}` of coefficient vectors with `sum kappa_k = 1` and
//! `sum k kappa_k = 0`: sampling, exact Jacobians, Morse-type certificates
//! for the critical values of `chi`, and brute-force isospectrality
//! searches over rational grids.

use crate::ratpoly::{complex_roots, RatPoly};
use crate::spectrum::{isospectral_through, return_probabilities, SpectrumCmp};
use crate::walk::{Rational, WalkShape};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MomentMapError {
    #[error("search space of about {estimate} cells exceeds the cap {cap}")]
    SearchSpaceTooLarge { estimate: u64, cap: u64 },
}

/// A coefficient vector on the affine variety `X_{e,f}`.  Nonnegativity is
/// not required; `in_simplex` records whether the point is a probability
/// vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParameterPoint {
    pub e: u32,
    pub f: u32,
    /// kappa_{-e} .. kappa_f, dense
    pub kappas: Vec<Rational>,
    pub in_simplex: bool,
}

impl ParameterPoint {
    pub fn new(e: u32, f: u32, kappas: Vec<Rational>) -> Self {
        Self::try_new(e, f, kappas).expect("point on X_{e,f}")
    }

    pub fn try_new(e: u32, f: u32, kappas: Vec<Rational>) -> Result<Self, String> {
        if kappas.len() != (e + f + 1) as usize {
            return Err(format!(
                "expected {} coefficients, got {}",
                e + f + 1,
                kappas.len()
            ));
        }
        let mass: Rational = kappas.iter().sum();
        let mean: Rational = kappas
            .iter()
            .enumerate()
            .map(|(i, v)| v * Rational::from(BigInt::from(i as i64 - e as i64)))
            .sum();
        if !mass.is_one() {
            return Err("point violates the mass constraint".into());
        }
        if !mean.is_zero() {
            return Err("point violates the mean constraint".into());
        }
        let in_simplex = kappas.iter().all(|v| !v.is_negative());
        Ok(ParameterPoint {
            e,
            f,
            kappas,
            in_simplex,
        })
    }

    pub fn kappa(&self, k: i64) -> &Rational {
        &self.kappas[(k + self.e as i64) as usize]
    }

    /// Converts to a validated shape (requires simplex membership and
    /// support reaching both ends).
    pub fn to_shape(&self) -> Option<WalkShape> {
        if !self.in_simplex {
            return None;
        }
        let map: BTreeMap<i64, Rational> = self
            .kappas
            .iter()
            .enumerate()
            .map(|(i, v)| (i as i64 - self.e as i64, v.clone()))
            .collect();
        WalkShape::new(map, false).ok()
    }

    pub fn from_shape(shape: &WalkShape) -> Self {
        let e = shape.e();
        let f = shape.f();
        let kappas = (-(e as i64)..=f as i64).map(|k| shape.coeff(k)).collect();
        ParameterPoint::new(e, f, kappas)
    }
}

/// Deterministic sampling of `X_{e,f}`.
///
/// With `simplex_only`, a Dirichlet-style sample (exponential spacings) is
/// blended toward an endpoint vertex to zero its mean, snapped to a fixed
/// rational grid, and the two constraints are repaired exactly by an
/// integer correction on an adjacent coordinate pair, retrying until the
/// result stays in the simplex with support reaching both ends.  Without
/// the flag, a Gaussian sample in the affine slice goes through the same
/// snap-and-repair.
pub fn sample(e: u32, f: u32, seed: u64, simplex_only: bool) -> ParameterPoint {
    assert!(e >= 1 && f >= 1);
    const GRID: i64 = 1 << 20;
    let n = (e + f + 1) as usize;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(2);
    for _attempt in 0..10_000 {
        let mut w: Vec<f64> = if simplex_only {
            // exponential spacings: -ln U_i, normalized
            let draws: Vec<f64> = (0..n)
                .map(|_| -(rng.gen_range(1e-12f64..1.0)).ln())
                .collect();
            let total: f64 = draws.iter().sum();
            draws.iter().map(|d| d / total).collect()
        } else {
            // Box-Muller around the barycenter
            (0..n)
                .map(|_| {
                    let u1: f64 = rng.gen_range(1e-12f64..1.0);
                    let u2: f64 = rng.gen_range(0.0f64..1.0);
                    1.0 / n as f64
                        + 0.3 * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                })
                .collect()
        };
        if simplex_only {
            // move the mean to zero by blending toward an endpoint vertex:
            // a convex combination stays inside the simplex
            let mean: f64 = w
                .iter()
                .enumerate()
                .map(|(i, v)| (i as f64 - e as f64) * v)
                .sum();
            if mean > 0.0 {
                let t = mean / (mean + e as f64);
                w.iter_mut().for_each(|v| *v *= 1.0 - t);
                w[0] += t;
            } else {
                let t = -mean / (f as f64 - mean);
                w.iter_mut().for_each(|v| *v *= 1.0 - t);
                w[n - 1] += t;
            }
        }
        // snap to the 1/GRID lattice and repair the two constraints
        // exactly on an adjacent coordinate pair (their k-values differ by
        // 1, so the integer correction always exists)
        let mut a: Vec<i64> = w
            .iter()
            .map(|&v| (v * GRID as f64).round() as i64)
            .collect();
        let r1: i64 = a.iter().sum::<i64>() - GRID;
        let r2: i64 = a
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as i64 - e as i64) * v)
            .sum();
        let mut fixed = false;
        for u in 0..n - 1 {
            let ku = u as i64 - e as i64;
            let dv = ku * r1 - r2;
            let du = -r1 - dv;
            let au = a[u] + du;
            let av = a[u + 1] + dv;
            let nonneg_ok = !simplex_only || (au >= 0 && av >= 0);
            let ends_ok = (u != 0 || au >= 1) && (u + 1 != n - 1 || av >= 1);
            if nonneg_ok && ends_ok {
                a[u] = au;
                a[u + 1] = av;
                fixed = true;
                break;
            }
        }
        if !fixed || a[0] == 0 || a[n - 1] == 0 {
            continue;
        }
        if simplex_only && a.iter().any(|&v| v < 0) {
            continue;
        }
        let kappas: Vec<Rational> = a
            .iter()
            .map(|&v| Rational::new(BigInt::from(v), BigInt::from(GRID)))
            .collect();
        let point = ParameterPoint {
            e,
            f,
            in_simplex: kappas.iter().all(|v| !v.is_negative()),
            kappas,
        };
        // constraints hold exactly by construction
        debug_assert!(point.kappas.iter().sum::<Rational>().is_one());
        return point;
    }
    panic!("sampling failed to find an admissible point");
}

/// Exact restricted Jacobian of `(I_1 .. I_N)` at a point: the full matrix
/// `dI_n/dkappa_k = n [t^{-k}] chi^{n-1}` multiplied by a basis of the
/// tangent space of the two linear constraints.  Rows are `n = 1..N`,
/// columns the `e+f-1` tangent directions.
pub fn moment_jacobian(point: &ParameterPoint, n_moments: usize) -> Vec<Vec<Rational>> {
    let e = point.e as i64;
    let f = point.f as i64;
    let dim = (point.e + point.f + 1) as usize;
    assert!(n_moments >= dim - 2, "need N >= dim X_{{e,f}} = e+f-1");
    // powers chi^0 .. chi^{N-1} as dense windows
    let mut full: Vec<Vec<Rational>> = Vec::with_capacity(n_moments);
    let mut win: BTreeMap<i64, Rational> = BTreeMap::new();
    win.insert(0, Rational::one());
    for n in 1..=n_moments {
        // dI_n/dkappa_k = n * [t^{-k}] chi^{n-1}
        let row: Vec<Rational> = (-e..=f)
            .map(|k| {
                win.get(&(-k)).cloned().unwrap_or_else(Rational::zero)
                    * Rational::from(BigInt::from(n as u64))
            })
            .collect();
        full.push(row);
        // advance to chi^n
        let mut next: BTreeMap<i64, Rational> = BTreeMap::new();
        for (a, va) in &win {
            if va.is_zero() {
                continue;
            }
            for k in -e..=f {
                let vb = point.kappa(k);
                if vb.is_zero() {
                    continue;
                }
                *next.entry(a + k).or_insert_with(Rational::zero) += va * vb;
            }
        }
        win = next;
    }
    // tangent basis of {sum x = 0, sum k x = 0}: vectors supported on
    // consecutive triples (1, -2, 1) shifted, which span the null space
    // when dim >= 3
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    for j in 0..dim.saturating_sub(2) {
        let mut v = vec![Rational::zero(); dim];
        v[j] = Rational::one();
        v[j + 1] = Rational::from(BigInt::from(-2));
        v[j + 2] = Rational::one();
        basis.push(v);
    }
    // restricted[n][j] = full[n] . basis[j]
    full.iter()
        .map(|row| {
            basis
                .iter()
                .map(|b| row.iter().zip(b).map(|(a, c)| a * c).sum())
                .collect()
        })
        .collect()
}

/// Exact rank over the rationals.
pub fn rank(matrix: &[Vec<Rational>]) -> usize {
    let mut m: Vec<Vec<Rational>> = matrix.to_vec();
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let piv = (row..rows).find(|&r| !m[r][col].is_zero());
        let pr = match piv {
            Some(p) => p,
            None => continue,
        };
        m.swap(row, pr);
        let pv = m[row][col].clone();
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let factor = &m[r][col] / &pv;
                for c in col..cols {
                    let t = &m[row][c] * &factor;
                    m[r][c] -= t;
                }
            }
        }
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}

/// Verdict of the critical-point analysis of `chi`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MorseVerdict {
    /// all critical points simple, all finite critical values distinct:
    /// local monodromy contains a transposition
    Transposition,
    /// a degenerate critical point or a repeated critical value
    Degenerate,
    /// certification failed (not produced by the exact route)
    Inconclusive,
}

/// Critical-point report: locations and values with error radii, plus the
/// exact verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MorseCertificate {
    pub schema: String,
    pub verdict: MorseVerdict,
    /// (re, im, radius) of each critical point (roots of t^{e+1} chi')
    pub critical_points: Vec<(f64, f64, f64)>,
    /// (re, im, radius) of the corresponding critical values
    pub critical_values: Vec<(f64, f64, f64)>,
}

/// Decides whether `chi` has only simple critical points with pairwise
/// distinct critical values.
///
/// The verdict is exact: `N = t^{e+1} chi'(t)` (an integer-cleared
/// polynomial) is tested for squarefreeness, and the critical-value
/// polynomial `D(u) = Res_t(t^e (chi(t) - u), N(t))`, computed by
/// interpolation over exact resultants, is tested for repeated roots via
/// `gcd(D, D')`.  Approximate critical data is attached for reporting.
pub fn morse_certificate(point: &ParameterPoint, _precision: u32) -> MorseCertificate {
    let e = point.e as i64;
    let f = point.f as i64;
    // N(t) = t^{e+1} chi'(t): coefficient of t^{k+e} is k kappa_k
    let mut ncoeffs = vec![Rational::zero(); (e + f) as usize + 1];
    for k in -e..=f {
        if k == 0 {
            continue;
        }
        let v = point.kappa(k);
        if !v.is_zero() {
            ncoeffs[(k + e) as usize] = v * Rational::from(BigInt::from(k));
        }
    }
    let n_poly = RatPoly::from_coeffs(ncoeffs);
    // report data from approximate roots
    let roots = complex_roots(&n_poly);
    let chi_at = |z: crate::ratpoly::C64| -> crate::ratpoly::C64 {
        let mut acc = crate::ratpoly::C64::new(0.0, 0.0);
        // chi = sum kappa_k t^k; evaluate via t^{k} = z^k with integer k
        for k in -e..=f {
            let v = point.kappa(k).to_f64().unwrap_or(0.0);
            if v == 0.0 {
                continue;
            }
            let mut p = crate::ratpoly::C64::new(1.0, 0.0);
            let (mut m, inv) = if k >= 0 { (k, false) } else { (-k, true) };
            let base = if inv {
                crate::ratpoly::C64::new(1.0, 0.0).div(z)
            } else {
                z
            };
            while m > 0 {
                p = p.mul(base);
                m -= 1;
            }
            acc = acc.add(crate::ratpoly::C64::new(v * p.re, v * p.im));
        }
        acc
    };
    let critical_points: Vec<(f64, f64, f64)> =
        roots.iter().map(|(z, r)| (z.re, z.im, *r)).collect();
    let critical_values: Vec<(f64, f64, f64)> = roots
        .iter()
        .map(|(z, r)| {
            let v = chi_at(*z);
            // first-order error propagation with a crude slope bound
            (v.re, v.im, r * 10.0)
        })
        .collect();

    // exact verdict
    if !n_poly.is_squarefree() {
        return MorseCertificate {
            schema: "morse/1".into(),
            verdict: MorseVerdict::Degenerate,
            critical_points,
            critical_values,
        };
    }
    // D(u) = Res_t(M_u, N) by interpolation: degree in u is deg N = e+f
    // (each critical point contributes one critical value factor).
    let deg_u = n_poly.degree();
    let mut pts = Vec::with_capacity(deg_u + 1);
    for j in 0..=deg_u {
        let u = Rational::from(BigInt::from(j as i64));
        // M_u(t) = t^e (chi - u): coefficient t^{k+e} = kappa_k, minus u at t^e
        let mut mcoeffs = vec![Rational::zero(); (e + f) as usize + 1];
        for k in -e..=f {
            mcoeffs[(k + e) as usize] = point.kappa(k).clone();
        }
        mcoeffs[e as usize] -= &u;
        let m_poly = RatPoly::from_coeffs(mcoeffs);
        pts.push((u, m_poly.resultant(&n_poly)));
    }
    let d_poly = RatPoly::interpolate(&pts);
    let verdict = if d_poly.is_squarefree() {
        MorseVerdict::Transposition
    } else {
        MorseVerdict::Degenerate
    };
    MorseCertificate {
        schema: "morse/1".into(),
        verdict,
        critical_points,
        critical_values,
    }
}

/// How a spectral coincidence between two distinct grid shapes is
/// explained, if it is.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairRelation {
    Reflected,
    /// `b = reindex(a, n)`
    Reindexed(i64),
    /// `b` is `a` rescaled by a rational root of `chi_a(lambda) = 1`
    Rescaled(String),
}

/// A surviving spectral collision.  The cursor is the later of the two
/// grid blocks (common denominators) involved; resumed runs re-emit only
/// pairs at or beyond the resume block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CandidatePair {
    pub cursor: u64,
    pub a: String,
    pub b: String,
}

/// A spectral coincidence explained by a known construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelatedPair {
    pub cursor: u64,
    pub a: String,
    pub b: String,
    pub relation: PairRelation,
}

/// Search result: spectra agreeing through `N`, split into pairs explained
/// by the known constructions and genuine candidates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub schema: String,
    pub cells_scanned: u64,
    /// last completed grid block; pass as `resume_from` to continue
    pub last_block: u64,
    pub candidates: Vec<CandidatePair>,
    pub construction_related: Vec<RelatedPair>,
}

pub struct SearchOptions {
    pub e: u32,
    pub f: u32,
    pub n_moments: usize,
    pub denominator_bound: u64,
    /// restrict the grid to unbiased shapes
    pub unbiased_only: bool,
    /// cap on the number of enumerated cells
    pub max_cells: u64,
    /// suppress pairs already reported by a run that completed blocks
    /// below this denominator (the scan itself always starts at 1 so
    /// cross-block pairs are never lost)
    pub resume_from: u64,
}

impl SearchOptions {
    pub fn new(e: u32, f: u32, n_moments: usize, denominator_bound: u64) -> Self {
        SearchOptions {
            e,
            f,
            n_moments,
            denominator_bound,
            unbiased_only: false,
            max_cells: 10_000_000,
            resume_from: 1,
        }
    }
}

/// Exhaustively enumerates shapes with support in `[-e, f]`, both ends
/// occupied, and common denominator at most `denominator_bound`; groups
/// them by exact spectrum through `n_moments`; filters pairs explained by
/// reflection, reindexing, or rational rescaling.  Surviving pairs are
/// candidates for genuine spectral collisions.
pub fn search_isospectral(opts: &SearchOptions) -> Result<SearchOutcome, MomentMapError> {
    let n = (opts.e + opts.f + 1) as usize;
    // crude upper bound: compositions of d into n parts, summed over d
    let mut estimate: u64 = 0;
    for d in 1..=opts.denominator_bound {
        let mut c = 1u64;
        for i in 0..(n as u64 - 1) {
            c = c.saturating_mul(d + i + 1) / (i + 1);
        }
        estimate = estimate.saturating_add(c);
    }
    if estimate > opts.max_cells {
        return Err(MomentMapError::SearchSpaceTooLarge {
            estimate,
            cap: opts.max_cells,
        });
    }
    let mut shapes: Vec<(WalkShape, u64)> = Vec::new();
    let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
    let mut cells: u64 = 0;
    for d in 1..=opts.denominator_bound {
        enumerate_grid(opts, d, &mut cells, &mut |shape| {
            let key = format!("{:?}", shape.coeffs());
            if seen.insert(key) {
                shapes.push((shape, d));
            }
        });
    }
    // group by spectrum
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, (s, _)) in shapes.iter().enumerate() {
        let spec = return_probabilities(s, opts.n_moments);
        let key = format!("{:?}", spec.values());
        groups.entry(key).or_default().push(i);
    }
    let mut candidates = Vec::new();
    let mut related = Vec::new();
    for idx in groups.values() {
        if idx.len() < 2 {
            continue;
        }
        for (ai, &a) in idx.iter().enumerate() {
            for &b in &idx[ai + 1..] {
                let (sa, da) = &shapes[a];
                let (sb, db) = &shapes[b];
                let cursor = (*da).max(*db);
                if cursor < opts.resume_from {
                    continue;
                }
                debug_assert_eq!(
                    isospectral_through(sa, sb, opts.n_moments),
                    SpectrumCmp::Equal
                );
                match explain_pair(sa, sb) {
                    Some(relation) => related.push(RelatedPair {
                        cursor,
                        a: sa.to_json(),
                        b: sb.to_json(),
                        relation,
                    }),
                    None => candidates.push(CandidatePair {
                        cursor,
                        a: sa.to_json(),
                        b: sb.to_json(),
                    }),
                }
            }
        }
    }
    Ok(SearchOutcome {
        schema: "search/1".into(),
        cells_scanned: cells,
        last_block: opts.denominator_bound,
        candidates,
        construction_related: related,
    })
}

fn enumerate_grid<F: FnMut(WalkShape)>(
    opts: &SearchOptions,
    denom: u64,
    cells: &mut u64,
    emit: &mut F,
) {
    let e = opts.e as i64;
    let f = opts.f as i64;
    let n = (e + f + 1) as usize;
    // weights a_i >= 0 summing to denom, with a_0 >= 1 and a_{n-1} >= 1
    let mut weights = vec![0u64; n];
    fn rec<F: FnMut(WalkShape)>(
        weights: &mut Vec<u64>,
        pos: usize,
        remaining: u64,
        denom: u64,
        e: i64,
        opts: &SearchOptions,
        cells: &mut u64,
        emit: &mut F,
    ) {
        let n = weights.len();
        if pos == n - 1 {
            weights[pos] = remaining;
            *cells += 1;
            if weights[0] == 0 || weights[n - 1] == 0 {
                return;
            }
            if opts.unbiased_only {
                let mean: i64 = weights
                    .iter()
                    .enumerate()
                    .map(|(i, &w)| (i as i64 - e) * w as i64)
                    .sum();
                if mean != 0 {
                    return;
                }
            }
            let map: BTreeMap<i64, Rational> = weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0)
                .map(|(i, &w)| {
                    (
                        i as i64 - e,
                        Rational::new(BigInt::from(w), BigInt::from(denom)),
                    )
                })
                .collect();
            if let Ok(shape) = WalkShape::new(map, false) {
                emit(shape);
            }
            return;
        }
        for w in 0..=remaining {
            weights[pos] = w;
            rec(weights, pos + 1, remaining - w, denom, e, opts, cells, emit);
        }
    }
    rec(&mut weights, 0, denom, denom, e, opts, cells, emit);
}

/// Checks the known spectrum-preserving constructions between two distinct
/// shapes: reflection, reindexing, and rational rescaling.
fn explain_pair(a: &WalkShape, b: &WalkShape) -> Option<PairRelation> {
    if &a.reindex(-1) == b {
        return Some(PairRelation::Reflected);
    }
    let max_n = (a.f().max(a.e()).max(b.f()).max(b.e())) as i64 + 1;
    for n in 2..=max_n {
        for s in [n, -n] {
            // reindex(a, s) has support s*supp(a)
            if a.support()
                .iter()
                .all(|k| (k * s) >= -(b.e() as i64) && (k * s) <= b.f() as i64)
                && &a.reindex(s) == b
            {
                return Some(PairRelation::Reindexed(s));
            }
            if b.support()
                .iter()
                .all(|k| (k * s) >= -(a.e() as i64) && (k * s) <= a.f() as i64)
                && &b.reindex(s) == a
            {
                return Some(PairRelation::Reindexed(-s));
            }
        }
    }
    // rational rescalings: lambda with chi_a(lambda) = 1, found exactly
    for lambda in rational_unit_levels(a) {
        let rescaled: BTreeMap<i64, Rational> = a
            .coeffs()
            .iter()
            .map(|(k, v)| (*k, v * pow_rational(&lambda, *k)))
            .collect();
        if let Ok(shape) = WalkShape::new(rescaled, false) {
            if &shape == b || shape.reindex(-1) == *b {
                return Some(PairRelation::Rescaled(crate::walk::format_rational(
                    &lambda,
                )));
            }
        }
    }
    None
}

/// Exact rational roots of `chi(lambda) = 1` other than 1.
fn rational_unit_levels(shape: &WalkShape) -> Vec<Rational> {
    let e = shape.e() as i64;
    let deg = (shape.e() + shape.f()) as usize;
    let mut coeffs = vec![Rational::zero(); deg + 1];
    for (k, v) in shape.coeffs() {
        coeffs[(k + e) as usize] += v;
    }
    coeffs[shape.e() as usize] -= Rational::one();
    let p = RatPoly::from_coeffs(coeffs);
    let bound = p.root_bound();
    p.rational_roots_in(&Rational::zero(), &bound, 4096)
        .into_iter()
        .filter(|r| !r.is_one())
        .collect()
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
