//! Property tests for the structural invariants: exact constraint
//! preservation, equivalence laws, spectrum invariances, series roundtrips,
//! and search-filter correctness.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use walkspec::moment_map::{sample, search_isospectral, PairRelation, SearchOptions};
use walkspec::puiseux::{alpha_branches, Direction, PuiseuxSeries};
use walkspec::spectrum::{isospectral_through, return_probabilities, SpectrumCmp};
use walkspec::walk::{rat, Equivalence, Rational, WalkShape};
use walkspec::Ctx;

/// Random exact shape (possibly biased) from small integer weights.
fn shape_strategy() -> impl Strategy<Value = WalkShape> {
    (
        1u32..=3,
        1u32..=3,
        proptest::collection::vec(0u64..6, 7),
        1u64..6,
        1u64..6,
    )
        .prop_map(|(e, f, mid, wl, wr)| {
            let n = (e + f + 1) as usize;
            let mut weights = vec![0u64; n];
            weights[0] = wl;
            weights[n - 1] = wr;
            for (i, w) in mid.iter().take(n - 2).enumerate() {
                weights[i + 1] = *w;
            }
            let total: u64 = weights.iter().sum();
            let pairs: Vec<(i64, Rational)> = weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0)
                .map(|(i, &w)| {
                    (
                        i as i64 - e as i64,
                        Rational::new(BigInt::from(w), BigInt::from(total)),
                    )
                })
                .collect();
            WalkShape::from_pairs(&pairs, false).expect("valid by construction")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mass_is_exactly_one(shape in shape_strategy()) {
        let mass: Rational = shape.coeffs().values().sum();
        prop_assert!(mass.is_one());
    }

    #[test]
    fn jensen_inequality_strict(shape in shape_strategy()) {
        // J_2 > (sum k kappa_k)^2 whenever the support has >= 2 points
        let mean = shape.mean();
        let j2 = shape.moments(2).j(2).clone();
        prop_assert!(j2 > &mean * &mean);
    }

    #[test]
    fn reindex_composition_law(shape in shape_strategy(), n in 1i64..4) {
        prop_assert_eq!(
            shape.reindex(n).reindex(-1),
            shape.reindex(-n)
        );
    }

    #[test]
    fn equivalence_symmetric_and_reflexive(a in shape_strategy(), b in shape_strategy()) {
        prop_assert_eq!(a.equivalent(&a), Equivalence::Identical);
        let ab = a.equivalent(&b);
        let ba = b.equivalent(&a);
        prop_assert_eq!(ab, ba);
    }

    #[test]
    fn spectra_invariant_under_reflection_and_reindex(shape in shape_strategy(), n in 2i64..4) {
        prop_assert_eq!(
            isospectral_through(&shape, &shape.reindex(-1), 12),
            SpectrumCmp::Equal
        );
        prop_assert_eq!(
            isospectral_through(&shape, &shape.reindex(n), 12),
            SpectrumCmp::Equal
        );
    }

    #[test]
    fn unbiased_shapes_have_no_scale_equivalents(seed in 0u64..500) {
        let point = sample(1, 2, seed, true);
        if let Some(shape) = point.to_shape() {
            prop_assert!(shape.scale_equivalents(96).unwrap().is_empty());
        }
    }

    #[test]
    fn series_invert_compose_identity(c1 in -0.4f64..0.4, c2 in -0.4f64..0.4, c3 in -0.4f64..0.4) {
        let prec = 192u32;
        let ctx = Ctx::new(prec);
        let coeffs = vec![
            ctx.one(),
            ctx.from_f64(c1),
            ctx.from_f64(c2),
            ctx.from_f64(c3),
            ctx.zero(),
            ctx.zero(),
        ];
        let f = PuiseuxSeries::from_coeffs(Direction::AtZero, 1, 1, coeffs, prec);
        let g = f.invert().unwrap();
        let id = g.compose(&f).unwrap();
        prop_assert_eq!(id.base_exponent(), rat(1, 1));
        prop_assert!(ctx.close_pow2(&id.coeffs()[0], &ctx.one(), -(prec as i64) + 16));
        for j in 1..id.coeffs().len() {
            prop_assert!(
                ctx.close_pow2(&id.coeffs()[j], &ctx.zero(), -(prec as i64) + 16),
                "order {} residue {}",
                j + 1,
                ctx.to_f64(&id.coeffs()[j])
            );
        }
    }
}

#[test]
fn alpha_branches_satisfy_defining_equation() {
    // composing chi with each alpha branch returns 1 + u through the
    // retained orders
    let prec = 256u32;
    let ctx = Ctx::new(prec);
    let shapes = [
        WalkShape::from_pairs(&[(-1, rat(2, 3)), (2, rat(1, 3))], true).unwrap(),
        WalkShape::from_pairs(
            &[
                (-2, rat(2, 11)),
                (-1, rat(3, 11)),
                (0, rat(1, 11)),
                (1, rat(4, 11)),
                (3, rat(1, 11)),
            ],
            true,
        )
        .unwrap(),
    ];
    for shape in &shapes {
        let (minus, plus) = alpha_branches(shape, 8, prec);
        for alpha in [&minus, &plus] {
            // chi(alpha) as a series
            let mut acc: Option<PuiseuxSeries> = None;
            for (k, v) in shape.coeffs() {
                let pk = alpha.powi(*k);
                let mut term_coeffs: Vec<_> = pk.coeffs().to_vec();
                let scale = ctx.from_rational(v);
                for c in term_coeffs.iter_mut() {
                    *c = ctx.mul(c, &scale);
                }
                let term = PuiseuxSeries::from_coeffs(
                    pk.direction(),
                    pk.ramification(),
                    {
                        // base index = base_exponent * ram
                        let be = pk.exponent(0);
                        use num_traits::ToPrimitive;
                        (be * Rational::from(BigInt::from(pk.ramification())))
                            .to_integer()
                            .to_i64()
                            .unwrap()
                    },
                    term_coeffs,
                    prec,
                );
                acc = Some(match acc {
                    None => term,
                    Some(a) => a.add(&term),
                });
            }
            let chi_alpha = acc.unwrap();
            // expect 1 + u: at infinity, u is local exponent -1
            let one_plus_u = PuiseuxSeries::from_coeffs(
                Direction::AtInfinity,
                1,
                -1,
                vec![ctx.one(), ctx.one()],
                prec,
            );
            let resid = chi_alpha.sub(&one_plus_u);
            for (j, c) in resid.coeffs().iter().enumerate() {
                assert!(
                    ctx.close_pow2(c, &ctx.zero(), -(prec as i64) + 24),
                    "shape {:?}: residual {} at exponent {}",
                    shape.coeffs(),
                    ctx.to_f64(c),
                    resid.exponent_in_u(j)
                );
            }
        }
    }
}

#[test]
fn scale_equivalents_irrational_lambda_spectra_close() {
    // chi = 1/5 t^-1 + 4/5 t^2: chi(lambda) = 1 at lambda = (sqrt(2)-1)/2,
    // irrational; the re-rationalized partner must be isospectral within
    // 2^(-precision+16).
    let prec = 128u32;
    let shape = WalkShape::from_pairs(&[(-1, rat(1, 5)), (2, rat(4, 5))], false).unwrap();
    let links = shape.scale_equivalents(prec).unwrap();
    assert_eq!(links.len(), 1);
    let (_, partner) = &links[0];
    let sa = return_probabilities(&shape, 10);
    let sb = return_probabilities(partner, 10);
    let ctx = Ctx::new(prec + 16);
    for n in 1..=10usize {
        let d = ctx.sub(&ctx.from_rational(sa.i(n)), &ctx.from_rational(sb.i(n)));
        assert!(
            ctx.lt(&d.abs(), &ctx.pow2(-(prec as i64) + 16)),
            "n={n}: diff {}",
            ctx.to_f64(&d)
        );
    }
}

#[test]
fn evaluate_l_monotone_in_terms() {
    // all series terms are nonnegative, so partial sums increase with the
    // term count once the tail bound admits evaluation at all
    let ctx = Ctx::new(128);
    let s = ctx.from_i64(5);
    let shape = walkspec::walk::lazy_walk();
    let mut last = ctx.zero();
    for n in [80usize, 100, 130, 170] {
        let v = walkspec::asymptotics::evaluate_l(&shape, &s, n, 128).unwrap();
        assert!(ctx.le(&last, &v), "partial sums must not decrease");
        last = v;
    }
}

#[test]
fn search_filter_catches_planted_reflection() {
    // an asymmetric unbiased shape on X_{2,2} and its reflection both live
    // on the denominator-7 grid; they must be classified as related, never
    // as candidates
    let a = WalkShape::from_pairs(
        &[
            (-2, rat(2, 7)),
            (-1, rat(1, 7)),
            (1, rat(3, 7)),
            (2, rat(1, 7)),
        ],
        true,
    )
    .unwrap();
    let b = a.reindex(-1);
    let out = search_isospectral(&SearchOptions {
        e: 2,
        f: 2,
        n_moments: 6,
        denominator_bound: 7,
        unbiased_only: true,
        max_cells: 50_000_000,
        resume_from: 1,
    })
    .unwrap();
    let aj = a.to_json();
    let bj = b.to_json();
    let planted_related = out.construction_related.iter().any(|p| {
        ((p.a == aj && p.b == bj) || (p.a == bj && p.b == aj))
            && matches!(
                p.relation,
                PairRelation::Reflected | PairRelation::Reindexed(-1)
            )
    });
    assert!(planted_related, "planted reflected pair must be explained");
    assert!(
        !out.candidates
            .iter()
            .any(|p| (p.a == aj && p.b == bj) || (p.a == bj && p.b == aj)),
        "planted pair must not appear as a candidate"
    );
}

#[test]
fn sampled_points_are_exact_and_deterministic() {
    for seed in 0..20u64 {
        let p = sample(2, 4, seed, true);
        let mass: Rational = p.kappas.iter().sum();
        let mean: Rational = p
            .kappas
            .iter()
            .enumerate()
            .map(|(i, v)| v * Rational::new(BigInt::from(i as i64 - 2), BigInt::one()))
            .sum();
        assert!(mass.is_one() && mean.is_zero());
        assert_eq!(p, sample(2, 4, seed, true));
        assert!(!p.kappas[0].is_negative());
    }
}
