//! Seeded replication.
//!
//! Replica `i` of a run with master seed `s` uses `derive_seed(s, i)`, the
//! SplitMix64 finalizer applied to `s + (i + 1)·0x9E3779B97F4A7C15 mod 2^64`.
//! Replicas run on the rayon pool and are folded in index order, so results
//! do not depend on scheduling.

use rayon::prelude::*;

pub use clqg_core::rng::derive_seed;

/// Seed for auxiliary randomness of a run (site picks and the like), kept
/// apart from the replica streams.
pub fn aux_seed(master: u64, index: u64) -> u64 {
    derive_seed(!master, index)
}

/// Runs `f(i, derive_seed(master, i))` for `i < count` and returns the results
/// in index order. The error of the lowest failing index wins.
pub fn map_replicas<T, E, F>(master: u64, count: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize, u64) -> Result<T, E> + Sync,
{
    let out: Vec<Result<T, E>> = (0..count).into_par_iter().map(|i| f(i, derive_seed(master, i as u64))).collect();
    out.into_iter().collect()
}

/// Like [`map_replicas`] but folds results into `acc` chunk by chunk, so only
/// `chunk` results are alive at a time.
pub fn fold_replicas<A, T, E, F, G>(master: u64, count: usize, chunk: usize, mut acc: A, f: F, mut fold: G) -> Result<A, E>
where
    T: Send,
    E: Send,
    F: Fn(usize, u64) -> Result<T, E> + Sync,
    G: FnMut(&mut A, usize, T),
{
    let chunk = chunk.max(1);
    let mut start = 0;
    while start < count {
        let end = (start + chunk).min(count);
        let part: Vec<Result<T, E>> =
            (start..end).into_par_iter().map(|i| f(i, derive_seed(master, i as u64))).collect();
        for (i, r) in (start..end).zip(part) {
            fold(&mut acc, i, r?);
        }
        start = end;
    }
    Ok(acc)
}
