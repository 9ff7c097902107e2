use proptest::prelude::*;

use weyl_core::extremal::{estimate_a, evaluate_witness, Ensemble, SearchConfig, Variant};
use weyl_core::lemmas::{check_convolution_inequality, check_cww, cww_lambdas, Witness};
use weyl_core::operators::{
    chain_maximal, coefficients, dyadic_maximal, haar_partial, haar_partial_by_coefficients,
    haar_square, hl_maximal_in, modulate, modulated_square_sup, phi_partial, project, SignSampler,
};
use weyl_core::random::{random_haar_polynomial, stream_rng};
use weyl_core::systems::{build_franklin, build_haar, read_system, write_system};
use weyl_core::*;

fn step(level: u32, values: &[f64], target: u32) -> SampledFunction {
    SampledFunction::new(DyadicGrid::new(level).unwrap(), values.to_vec())
        .unwrap()
        .refine_to(DyadicGrid::new(target).unwrap())
        .unwrap()
}

fn step_values(level: u32) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0f64..4.0, 1usize << level)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_matches_closed_forms(
        (level, values) in (0u32..7).prop_flat_map(|l| (Just(l), step_values(l))),
        extra in 0u32..4,
        p in 1.0f64..6.0,
    ) {
        let f = step(level, &values, level + extra);
        let w = (-(level as f64)).exp2();
        let integral: f64 = values.iter().sum::<f64>() * w;
        let norm = (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * w).powf(1.0 / p);
        prop_assert!((f.integrate() - integral).abs() <= 1e-10);
        prop_assert!((f.lp_norm(p).unwrap() - norm).abs() <= 1e-10 * norm.max(1.0));
    }

    #[test]
    fn haar_parseval_is_exact(
        (level, values) in (1u32..8).prop_flat_map(|l| (Just(l), step_values(l))),
    ) {
        let f = step(level, &values, level);
        let s = build_haar(1 << level, *f.grid()).unwrap();
        let a = coefficients(&f, &s).unwrap();
        let energy: f64 = a.values().iter().map(|c| c * c).sum();
        let norm2 = f.lp_norm(2.0).unwrap().powi(2);
        prop_assert!((energy - norm2).abs() <= 1e-10 * norm2.max(1.0));
    }

    #[test]
    fn dyadic_intervals_nest(x in 0.0f64..1.0, n in 0u32..30) {
        let outer = DyadicInterval::containing(x, n).unwrap();
        let inner = DyadicInterval::containing(x, n + 1).unwrap();
        prop_assert!(inner.is_subset_of(&outer));
        prop_assert!(outer.contains(x) && inner.contains(x));
        prop_assert_eq!(inner.parent(), Some(outer));
    }

    #[test]
    fn lp_norms_increase_with_p(
        values in step_values(5),
        p1 in 1.0f64..8.0,
        dp in 0.0f64..8.0,
    ) {
        let f = step(5, &values, 5);
        prop_assert!(f.lp_norm(p1).unwrap() <= f.lp_norm(p1 + dp).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn centers_are_interval_midpoints(n in 0u32..30, j in 1u64..1 << 20) {
        let j = 1 + (j - 1) % (1u64 << n);
        let c = center((1usize << n) + j as usize).unwrap();
        let mid = (2.0 * j as f64 - 1.0) / (n as f64 + 1.0).exp2();
        prop_assert_eq!(c.level, n);
        prop_assert_eq!(c.position, mid);
    }

    #[test]
    fn haar_partial_forms_agree(
        values in step_values(8),
        n in 0u32..=8,
    ) {
        let f = step(8, &values, 8);
        let avg = haar_partial(&f, n).unwrap();
        let coef = haar_partial_by_coefficients(&f, n).unwrap();
        prop_assert!(close(avg.values(), coef.values(), 1e-12));
    }

    #[test]
    fn maximal_functions_are_ordered(
        values in step_values(6),
        q1 in 1.0f64..3.0,
        dq in 0.0f64..3.0,
    ) {
        let f = step(6, &values, 7);
        let m1 = hl_maximal_in(&f, 1.0, MaximalMode::Exact).unwrap().function;
        let mq1 = hl_maximal_in(&f, q1, MaximalMode::Exact).unwrap().function;
        let mq2 = hl_maximal_in(&f, q1 + dq, MaximalMode::Exact).unwrap().function;
        let md = dyadic_maximal(&f);
        for i in 0..f.values().len() {
            let t = 1e-12 * (1.0 + m1.values()[i]);
            prop_assert!(md.values()[i] <= m1.values()[i] + t);
            prop_assert!(f.values()[i].abs() <= mq1.values()[i] + t);
            prop_assert!(mq1.values()[i] <= mq2.values()[i] * (1.0 + 1e-12) + 1e-12);
        }
    }

    #[test]
    fn haar_sign_changes_keep_the_square_function(
        values in step_values(6),
        signs in prop::collection::vec(any::<bool>(), 64),
    ) {
        let f = step(6, &values, 6);
        let s = build_haar(64, *f.grid()).unwrap();
        let a = coefficients(&f, &s).unwrap();
        let lambda: Vec<f64> = signs.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        let g = modulate(&a, &lambda, &s).unwrap();
        let sf = haar_square(&f);
        prop_assert!(close(haar_square(&g).values(), sf.values(), 1e-12));
    }

    #[test]
    fn convolution_ratio_never_exceeds_one(
        a in prop::collection::vec(-10.0f64..10.0, 0..40),
        b in prop::collection::vec(-10.0f64..10.0, 0..40),
    ) {
        let e = check_convolution_inequality(&a, &b).unwrap();
        prop_assert!(e.ratio_sup <= 1.0 + 1e-12);
    }

    #[test]
    fn good_lambda_sets_are_nested(seed in any::<u64>(), levels in 1u32..9) {
        let grid = DyadicGrid::new(9).unwrap();
        let f = random_haar_polynomial(levels, grid, &mut stream_rng(seed, 0)).unwrap();
        let eps: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
        let t = check_cww(&f, &eps, &cww_lambdas(&f, 12)).unwrap();
        prop_assert!(t.inclusions_hold());
    }

    #[test]
    fn estimates_merge_like_a_sequential_scan(
        pairs in prop::collection::vec((0.0f64..5.0, 0.0f64..5.0), 1..60),
        split in 0usize..60,
    ) {
        let split = split.min(pairs.len());
        let fold = |ps: &[(f64, f64)], base: usize| {
            let mut e = ConstantEstimate::empty(0);
            for (i, &(l, r)) in ps.iter().enumerate() {
                e.offer(l, r, || Witness { input: base + i, ..Default::default() });
            }
            e
        };
        let whole = fold(&pairs, 0);
        let merged = fold(&pairs[..split], 0).merge(fold(&pairs[split..], split));
        prop_assert_eq!(whole, merged);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn projections_are_linear(
        x in step_values(5),
        y in step_values(5),
        c in -3.0f64..3.0,
        n in 0u32..=4,
    ) {
        let s = build_franklin(16, DyadicGrid::new(8).unwrap()).unwrap();
        let f = step(5, &x, 8);
        let g = step(5, &y, 8);
        let h = f.add_scaled(c, &g).unwrap();
        let (af, ag, ah) = (
            coefficients(&f, &s).unwrap(),
            coefficients(&g, &s).unwrap(),
            coefficients(&h, &s).unwrap(),
        );
        let idx = [2, 3, 7, 11, 16];
        let lam: Vec<f64> = (0..16).map(|k| ((k * 7) % 5) as f64 / 4.0 - 0.5).collect();
        let pairs = [
            (project(&af, &s, &idx).unwrap(), project(&ag, &s, &idx).unwrap(), project(&ah, &s, &idx).unwrap()),
            (phi_partial(&af, &s, n).unwrap(), phi_partial(&ag, &s, n).unwrap(), phi_partial(&ah, &s, n).unwrap()),
            (haar_partial(&f, n).unwrap(), haar_partial(&g, n).unwrap(), haar_partial(&h, n).unwrap()),
            (modulate(&af, &lam, &s).unwrap(), modulate(&ag, &lam, &s).unwrap(), modulate(&ah, &lam, &s).unwrap()),
        ];
        for (pf, pg, ph) in pairs {
            let combo = pf.add_scaled(c, &pg).unwrap();
            prop_assert!(close(combo.values(), ph.values(), 1e-10));
        }
    }

    #[test]
    fn extending_a_nested_chain_never_lowers_the_maximal_function(
        perm in Just((2usize..=32).collect::<Vec<_>>()).prop_shuffle(),
        cuts in prop::collection::btree_set(1usize..31, 1..8),
        seed in any::<u64>(),
    ) {
        let s = build_haar(32, DyadicGrid::new(6).unwrap()).unwrap();
        let f = random_haar_polynomial(5, *s.grid(), &mut stream_rng(seed, 0)).unwrap();
        let a = coefficients(&f, &s).unwrap();
        let cuts: Vec<usize> = cuts.into_iter().collect();
        let chain = |cs: &[usize]| {
            IndexChain::infer(cs.iter().map(|&c| perm[..c].to_vec()).collect()).unwrap()
        };
        let full = chain_maximal(&a, &s, &chain(&cuts)).unwrap();
        let mut prev = vec![0.0; full.values().len()];
        for k in 1..=cuts.len() {
            let m = chain_maximal(&a, &s, &chain(&cuts[..k])).unwrap();
            for ((p, v), l) in prev.iter().zip(m.values()).zip(full.values()) {
                prop_assert!(p <= v && v <= l);
            }
            prev = m.into_values();
        }
    }

    #[test]
    fn witnesses_reproduce_and_chain_classes_are_ordered(
        seed in any::<u64>(),
        n in 2usize..6,
    ) {
        let s = build_haar(16, DyadicGrid::new(6).unwrap()).unwrap();
        let base = SearchConfig {
            n,
            active: Some(8),
            restarts: 3,
            iterations: 40,
            seed,
            exhaustive_limit: 0,
            ensemble: Ensemble::Mixed,
            variant: Variant::Mon,
            ..Default::default()
        };
        let sng = estimate_a(&s, &SearchConfig { variant: Variant::Sng, active: Some(n), ..base.clone() }).unwrap();
        let mon_n = estimate_a(&s, &SearchConfig { active: Some(n), ..base.clone() }).unwrap();
        let mon = estimate_a(&s, &base).unwrap();
        prop_assert_eq!(sng.best_value, mon_n.best_value);
        let full = estimate_a(&s, &SearchConfig { variant: Variant::Full, ..base.clone() }).unwrap();
        for r in [&sng, &mon, &full] {
            prop_assert_eq!(evaluate_witness(&s, &r.witness, 2.0).unwrap(), r.best_value);
        }
        prop_assert!(mon.best_value <= full.best_value);
    }
}

#[test]
fn haar_square_sup_over_signs_is_the_square_function() {
    let s = build_haar(16, DyadicGrid::new(6).unwrap()).unwrap();
    for seed in 0..10 {
        let f = random_haar_polynomial(3, *s.grid(), &mut stream_rng(seed, 0)).unwrap();
        let a = coefficients(&f, &s).unwrap();
        let sup = modulated_square_sup(&a, &s, &SignSampler::new(64, seed)).unwrap();
        assert!(sup.exact);
        assert!(close(sup.function.values(), haar_square(&f).values(), 1e-12));
    }
}

#[test]
fn system_files_round_trip_bit_exactly() {
    let s = build_franklin(32, DyadicGrid::new(9).unwrap()).unwrap();
    let mut buf = Vec::new();
    write_system(&s, &mut buf).unwrap();
    let back = read_system(buf.as_slice()).unwrap();
    for (a, b) in s.functions().iter().zip(back.functions()) {
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(back.len(), 32);
    assert_eq!(back.first_index_special(), s.first_index_special());
}
