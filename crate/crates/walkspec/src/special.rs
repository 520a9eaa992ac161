//! Independent high-precision special-function evaluations.
//!
//! These are used as cross-checks against the quadrature and series
//! machinery elsewhere in the crate, so they deliberately use a different
//! computational route (ascending series only, no asymptotics, no
//! quadrature).

use crate::real::{Ctx, Real};

/// Modified Bessel function `I_0(x)` by the ascending series
/// `sum_k (x^2/4)^k / (k!)^2`.  All terms are positive, so the working
/// precision only needs a modest guard.
pub fn bessel_i0(ctx: &Ctx, x: &Real) -> Real {
    let w = ctx.widened(32);
    let q = {
        let h = w.div(x, &w.from_i64(2));
        w.mul(&h, &h)
    };
    let mut term = w.one();
    let mut acc = w.one();
    let cutoff = w.pow2(-(ctx.prec() as i64) - 16);
    let mut k: i64 = 1;
    loop {
        // term_k = term_{k-1} * q / k^2
        term = w.div(&w.mul(&term, &q), &w.from_i64(k * k));
        acc = w.add(&acc, &term);
        if w.lt(&w.div(&term, &acc).abs(), &cutoff) {
            break;
        }
        k += 1;
        assert!(k < 1_000_000, "I_0 series failed to converge");
    }
    let mut out = acc;
    out.set_precision(ctx.prec() as usize, astro_float::RoundingMode::ToEven)
        .expect("set_precision");
    out
}

/// Modified Bessel function `K_0(x)` for `x > 0` by the ascending series
///
/// ```text
/// K_0(x) = -(ln(x/2) + gamma) I_0(x) + sum_{k>=1} (x^2/4)^k / (k!)^2 H_k
/// ```
///
/// The two parts cancel to roughly `e^{-2x}` of their size, so the working
/// precision grows with `x`; this stays practical for the moderate `x`
/// used in cross-checks.
pub fn bessel_k0(ctx: &Ctx, x: &Real) -> Real {
    // cancellation costs about 2x/ln2 bits
    let xf = ctx.to_f64(x);
    assert!(xf > 0.0, "K_0 requires a positive argument");
    let guard = (2.0 * xf * std::f64::consts::LOG2_E).ceil() as u32 + 64;
    let w = ctx.widened(guard);
    let q = {
        let h = w.div(x, &w.from_i64(2));
        w.mul(&h, &h)
    };
    let mut term = w.one(); // (x^2/4)^k / (k!)^2 at k = 0
    let mut i0 = w.one();
    let mut hk = w.zero(); // harmonic number H_k
    let mut hsum = w.zero();
    let cutoff = w.pow2(-(w.prec() as i64) + 16);
    let mut k: i64 = 1;
    loop {
        term = w.div(&w.mul(&term, &q), &w.from_i64(k * k));
        hk = w.add(&hk, &w.recip(&w.from_i64(k)));
        i0 = w.add(&i0, &term);
        hsum = w.add(&hsum, &w.mul(&term, &hk));
        if w.lt(&term.abs(), &cutoff) && k as f64 > xf {
            break;
        }
        k += 1;
        assert!(k < 1_000_000, "K_0 series failed to converge");
    }
    let log_half_x = w.ln(&w.div(x, &w.from_i64(2)));
    let gamma = euler_gamma(&w);
    let lead = w.mul(&w.neg(&w.add(&log_half_x, &gamma)), &i0);
    let mut out = w.add(&lead, &hsum);
    out.set_precision(ctx.prec() as usize, astro_float::RoundingMode::ToEven)
        .expect("set_precision");
    out
}

/// Euler-Mascheroni constant by the Brent-McMillan series:
/// with `A(n) = sum_k (n^k/k!)^2 H_k` and `B(n) = sum_k (n^k/k!)^2`,
/// `gamma = A(n)/B(n) - ln n + O(e^{-4n})`.
pub fn euler_gamma(ctx: &Ctx) -> Real {
    let n = ((ctx.prec() as f64 + 16.0) * std::f64::consts::LN_2 / 4.0).ceil() as i64 + 1;
    let w = ctx.widened(64);
    let nn = w.from_i64(n * n);
    let mut term = w.one(); // (n^k / k!)^2
    let mut a = w.zero();
    let mut b = w.one();
    let mut hk = w.zero();
    let mut k: i64 = 1;
    // terms peak near k = 2n at size ~ e^{4n}
    let cutoff = w.pow2(-(w.prec() as i64));
    loop {
        term = w.div(&w.mul(&term, &nn), &w.from_i64(k * k));
        hk = w.add(&hk, &w.recip(&w.from_i64(k)));
        a = w.add(&a, &w.mul(&term, &hk));
        b = w.add(&b, &term);
        if k as f64 > 2.2 * n as f64 && w.lt(&w.div(&term, &b).abs(), &cutoff) {
            break;
        }
        k += 1;
        assert!(k < 1_000_000, "gamma series failed to converge");
    }
    let mut out = w.sub(&w.div(&a, &b), &w.ln(&w.from_i64(n)));
    out.set_precision(ctx.prec() as usize, astro_float::RoundingMode::ToEven)
        .expect("set_precision");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_gamma_f64_reference() {
        let ctx = Ctx::new(128);
        let g = euler_gamma(&ctx);
        assert!((ctx.to_f64(&g) - 0.577_215_664_901_532_9).abs() < 1e-15);
    }

    #[test]
    fn i0_small_argument_reference() {
        let ctx = Ctx::new(128);
        // I_0(1) = 1.26606587775200833559824462521...
        let v = bessel_i0(&ctx, &ctx.one());
        assert!((ctx.to_f64(&v) - 1.2660658777520084).abs() < 1e-15);
    }

    #[test]
    fn k0_small_argument_reference() {
        let ctx = Ctx::new(128);
        // K_0(1) = 0.42102443824070833333562737921...
        let v = bessel_k0(&ctx, &ctx.one());
        assert!((ctx.to_f64(&v) - 0.4210244382407083).abs() < 1e-15);
        // K_0(10) = 1.778006231616765e-5
        let v = bessel_k0(&ctx, &ctx.from_i64(10));
        assert!((ctx.to_f64(&v) / 1.778006231616765e-5 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn wronskian_identity() {
        // x (I_0'(x) K_0(x) - I_0(x) K_0'(x)) = 1, checked via central
        // differences at modest precision.
        let ctx = Ctx::new(256);
        let x = ctx.from_f64(3.5);
        let h = ctx.pow2(-64);
        let d = |f: &dyn Fn(&Ctx, &Real) -> Real| {
            let hi = f(&ctx, &ctx.add(&x, &h));
            let lo = f(&ctx, &ctx.sub(&x, &h));
            ctx.div(&ctx.sub(&hi, &lo), &ctx.mul(&ctx.from_i64(2), &h))
        };
        let i0p = d(&|c, v| bessel_i0(c, v));
        let k0p = d(&|c, v| bessel_k0(c, v));
        let i0 = bessel_i0(&ctx, &x);
        let k0 = bessel_k0(&ctx, &x);
        let w = ctx.mul(&x, &ctx.sub(&ctx.mul(&i0p, &k0), &ctx.mul(&i0, &k0p)));
        assert!(ctx.close_pow2(&w, &ctx.one(), -100));
    }
}
