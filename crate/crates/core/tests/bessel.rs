use clqg_core::bessel::{
    bridge_to_bessel_check, coupled_bessel, domination_check, motoo_fraction, motoo_fractions, sample_bessel3,
    sample_bridge, sample_bridge_above, sample_bridges_above, uniform_grid, MotooResolution, PathKind,
};
use clqg_core::gauge::GaugeTriple;
use clqg_core::rng;
use clqg_core::stats::{ks_two_sample, mean, variance};
use clqg_core::Error;
use proptest::prelude::*;

#[test]
fn bessel_second_moment_is_three_t() {
    let ys: Vec<f64> = (0..100_000).map(|s| sample_bessel3(0.0, &[1.0], s).unwrap().values[0].powi(2)).collect();
    let se = (variance(&ys) / ys.len() as f64).sqrt();
    assert!((mean(&ys) - 3.0).abs() <= 3.0 * se, "{} ± {se}", mean(&ys));
}

#[test]
fn bessel_starts_near_its_start() {
    let t: f64 = 1e-4;
    for s in 0..500 {
        let y = sample_bessel3(5.0, &[t, 1.0], s).unwrap().values[0];
        assert!((y - 5.0).abs() <= 5.0 * t.sqrt());
    }
}

#[test]
fn bessel_brownian_scaling() {
    let a: Vec<f64> = (0..10_000).map(|s| sample_bessel3(0.0, &[1.0], rng::derive_seed(1, s)).unwrap().values[0]).collect();
    let b: Vec<f64> = (0..10_000)
        .map(|s| sample_bessel3(0.0, &[8.0], rng::derive_seed(2, s)).unwrap().values[0] / (2.0 * 2f64.sqrt()))
        .collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn bridge_endpoint_and_marginal_variance() {
    let grid = uniform_grid(4.0, 0.1);
    let xs: Vec<f64> = (0..20_000)
        .map(|s| {
            let p = sample_bridge(1.5, &grid, s).unwrap();
            assert_eq!(*p.values.last().unwrap(), 1.5);
            p.at(1.0).unwrap()
        })
        .collect();
    // B_s ~ N(s e / T, s (T − s) / T)
    let (m, v) = (1.5 * 0.25, 1.0 * 3.0 / 4.0);
    let se = (v / xs.len() as f64).sqrt();
    assert!((mean(&xs) - m).abs() <= 4.0 * se);
    assert!((variance(&xs) - v).abs() <= 0.05 * v);
}

#[test]
fn bridge_law_does_not_depend_on_the_grid() {
    let coarse = uniform_grid(3.0, 0.2);
    let fine = uniform_grid(3.0, 0.1);
    let a: Vec<f64> = (0..5000).map(|s| sample_bridge(0.0, &coarse, rng::derive_seed(3, s)).unwrap().at(1.2).unwrap()).collect();
    let b: Vec<f64> = (0..5000).map(|s| sample_bridge(0.0, &fine, rng::derive_seed(4, s)).unwrap().at(1.2).unwrap()).collect();
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn high_barrier_is_rarely_hit() {
    let t = 16.0;
    let grid = uniform_grid(t, 0.1);
    let batch = sample_bridges_above(6.0 * t.sqrt(), 0.0, &grid, 2000, 5, 1_000_000).unwrap();
    assert!(batch.acceptance_rate() > 0.95);
}

#[test]
fn ballot_acceptance_at_zero_barrier() {
    // exchangeable bridge increments: exactly one cyclic shift stays nonnegative
    let step = 1.0;
    for (t, count) in [(10.0, 2000), (100.0, 300)] {
        let grid = uniform_grid(t, step);
        let batch = sample_bridges_above(0.0, 0.0, &grid, count, 8, 10_000_000).unwrap();
        let p = step / t;
        let n = batch.proposals as f64;
        let rate = batch.acceptance_rate();
        assert!((rate - p).abs() <= 3.0 * (p * (1.0 - p) / n).sqrt(), "T={t}: {rate}");
        assert!((0.1..=10.0).contains(&(rate * t)));
        for path in &batch.paths {
            assert!(path.values.iter().all(|&x| x >= 0.0));
        }
    }
}

#[test]
fn bridge_sampler_errors() {
    let grid = uniform_grid(50.0, 0.1);
    let r = sample_bridges_above(0.0, 0.0, &grid, 10, 1, 100);
    assert!(matches!(r, Err(Error::RejectionBudgetExhausted { proposals: 100, .. })));
    assert!(sample_bridges_above(1.0, -2.0, &grid, 1, 1, 100).is_err());
    assert!(sample_bridge_above(1.0, 40.0, 0.0, &grid, 1, 100).is_err());
    let (p, rate) = sample_bridge_above(3.0, 50.0, 1.0, &grid, 1, 100_000).unwrap();
    assert!(rate > 0.0 && rate <= 1.0);
    assert_eq!(p.kind, PathKind::BridgeAboveBarrier { v: 3.0, endpoint: 1.0 });
    assert!(p.values.iter().all(|&x| x >= -3.0));
}

#[test]
fn zero_barrier_is_always_respected() {
    let f = motoo_fractions(|_| 0.0, &[50.0], 10.0, 200, 1, MotooResolution::default()).unwrap();
    assert_eq!(f, vec![1.0]);
}

#[test]
fn motoo_fractions_are_nested() {
    let g = GaugeTriple::parametric(0.5, 1.0).unwrap();
    let gamma = |t: f64| clqg_core::gauge::eval_gamma(&g, t).unwrap();
    let f = motoo_fractions(gamma, &[20.0, 100.0, 500.0], 10.0, 400, 3, MotooResolution::default()).unwrap();
    assert!(f.windows(2).all(|w| w[1] <= w[0]), "{f:?}");
    let single = motoo_fraction(&g, 100.0, 10.0, 400, 3).unwrap();
    assert_eq!(single, f[1]);
    assert!(motoo_fraction(&g, 5.0, 10.0, 10, 3).is_err());
}

#[test]
fn coupled_pair_at_zero_shift_coincides() {
    let grid = uniform_grid(2.0, 0.01);
    let (a, b) = coupled_bessel(0.0, &grid, 4, 9).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn domination_has_no_pathwise_violations() {
    let r = domination_check(2.0, 10.0, 1000, 0.01, 11).unwrap();
    assert_eq!(r.violations, 0);
    assert!(r.checks.iter().all(|c| c.holds));
    assert!(r.law_p_value > 0.01, "coupled Y^v_b has the wrong law: p = {}", r.law_p_value);
}

#[test]
fn far_start_looks_brownian() {
    let r = domination_check(50.0, 1.0, 1000, 0.01, 12).unwrap();
    assert!(r.shifted_end_mean.abs() <= 3.0 * r.shifted_end_se, "{} ± {}", r.shifted_end_mean, r.shifted_end_se);
}

#[test]
fn conditioned_bridges_approach_bessel() {
    let r = bridge_to_bessel_check(1.0, 1.0, 0.0, &[10.0, 100.0], 1000, 0.002, 21, 10_000_000).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!(r.rows.iter().all(|row| row.accepted == 1000));
    assert!(r.passed, "{r:?}");
    assert!(bridge_to_bessel_check(1.0, 1.0, 0.0, &[0.5], 10, 0.01, 1, 100).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bessel_paths_are_positive(seed in 0u64..u64::MAX, start in 0.0f64..3.0) {
        let grid = uniform_grid(5.0, 0.05);
        let p = sample_bessel3(start, &grid[1..], seed).unwrap();
        prop_assert!(p.values.iter().all(|&y| y > 0.0));
    }
}

#[test]
fn bridge_limit_ignores_a_moderate_endpoint() {
    let e = clqg_core::chaos::alpha() * 1024f64.ln().sqrt();
    let r = bridge_to_bessel_check(1.0, 1.0, e, &[100.0], 800, 0.002, 23, 10_000_000).unwrap();
    assert!(r.passed, "{r:?}");
}
