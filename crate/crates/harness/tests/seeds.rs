use std::collections::HashSet;

use clqg_core::rng;
use clqg_harness::derive_seed;
use clqg_harness::replicas::{fold_replicas, map_replicas};
use rand::Rng;

#[test]
fn reference_values() {
    // SplitMix64 from state 0: first output 0xE220A8397B1DCDAF, second 0x6E789E6AA1B965F4
    assert_eq!(derive_seed(0, 0), 0xE220_A839_7B1D_CDAF);
    assert_eq!(derive_seed(0, 1), 0x6E78_9E6A_A1B9_65F4);
}

#[test]
fn same_inputs_same_seed() {
    for (s, i) in [(0u64, 0u64), (42, 7), (u64::MAX, u64::MAX)] {
        assert_eq!(derive_seed(s, i), derive_seed(s, i));
    }
}

#[test]
fn neighbouring_indices_never_collide() {
    let mut r = rng::seeded(1);
    for _ in 0..10_000 {
        let s: u64 = r.random();
        assert_ne!(derive_seed(s, 0), derive_seed(s, 1));
    }
}

#[test]
fn streams_of_one_master_are_distinct() {
    let seen: HashSet<u64> = (0..100_000).map(|i| derive_seed(99, i)).collect();
    assert_eq!(seen.len(), 100_000);
}

#[test]
fn byte_frequencies_are_uniform() {
    let n = 100_000u64;
    let mut counts = [[0u64; 256]; 8];
    for i in 0..n {
        for (pos, b) in derive_seed(12345, i).to_le_bytes().iter().enumerate() {
            counts[pos][*b as usize] += 1;
        }
    }
    let p = 1.0 / 256.0;
    let (mean, se) = (n as f64 * p, (n as f64 * p * (1.0 - p)).sqrt());
    for row in &counts {
        for &c in row {
            assert!((c as f64 - mean).abs() <= 5.0 * se, "{c} vs {mean} ± {se}");
        }
    }
}

#[test]
fn replica_results_come_back_in_index_order() {
    let out: Vec<(usize, u64)> = map_replicas(5, 257, |i, s| Ok::<_, ()>((i, s))).unwrap();
    for (k, &(i, s)) in out.iter().enumerate() {
        assert_eq!((i, s), (k, derive_seed(5, k as u64)));
    }
    let folded = fold_replicas(5, 257, 10, Vec::new(), |i, s| Ok::<_, ()>((i, s)), |acc, _, x| acc.push(x)).unwrap();
    assert_eq!(folded, out);
}

#[test]
fn first_failing_replica_is_reported() {
    let r: Result<Vec<usize>, usize> = map_replicas(0, 100, |i, _| if i % 30 == 17 { Err(i) } else { Ok(i) });
    assert_eq!(r, Err(17));
    let r = fold_replicas(0, 100, 7, 0usize, |i, _| if i >= 40 { Err(i) } else { Ok(i) }, |a, _, x| *a += x);
    assert_eq!(r, Err(40));
}
