//! Green function checks: closed forms on one and two sites, random-walk
//! occupation counts on a box, and the `g log 2` growth of the centre variance.

use std::sync::Arc;

use clqg_core::chaos::G;
use clqg_core::gff::{green, GreenOperator, DEFAULT_DENSE_CAP};
use clqg_core::lattice::{LatticeDomain, SiteSet};
use clqg_core::rng;
use rand::Rng;
use serde::Serialize;

use super::{bad, domain};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Outcome, Table};
use crate::replicas::{aux_seed, map_replicas};
use crate::row;

#[derive(Debug, Clone, Serialize)]
pub struct WalkEntry {
    pub x: (i64, i64),
    pub y: (i64, i64),
    pub exact: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenSummary {
    pub singleton: f64,
    pub pair_diagonal: f64,
    pub pair_off_diagonal: f64,
    /// Largest deviation of the pair entries from 16/15 and 4/15.
    pub pair_error: f64,
    pub box_side: u32,
    pub walks: usize,
    pub walk_entries: Vec<WalkEntry>,
    pub walk_max_abs_z: f64,
    pub sizes: Vec<u32>,
    pub center_green: Vec<f64>,
    pub increments: Vec<f64>,
    /// `g log(N_{i+1}/N_i)`.
    pub increment_targets: Vec<f64>,
    pub max_relative_increment_error: f64,
}

fn from_sites(sites: Vec<(i64, i64)>) -> Result<Arc<LatticeDomain>> {
    Ok(Arc::new(LatticeDomain::from_site_set(SiteSet::from_sites(sites), 3)?))
}

/// Mean and standard error of the number of visits to `y` (start included)
/// by simple random walk from `x`, killed on leaving `[0, w)²`.
pub fn walk_visits(w: i64, x: (i64, i64), y: (i64, i64), walks: usize, seed: u64) -> (f64, f64) {
    let mut r = rng::seeded(seed);
    let (mut sum, mut sumsq) = (0.0, 0.0);
    for _ in 0..walks {
        let (mut px, mut py) = x;
        let mut visits = 0u64;
        loop {
            if (px, py) == y {
                visits += 1;
            }
            match r.random_range(0..4u8) {
                0 => px += 1,
                1 => px -= 1,
                2 => py += 1,
                _ => py -= 1,
            }
            if px < 0 || py < 0 || px >= w || py >= w {
                break;
            }
        }
        sum += visits as f64;
        sumsq += (visits * visits) as f64;
    }
    let k = walks as f64;
    let mean = sum / k;
    (mean, ((sumsq / k - mean * mean) / k).sqrt())
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome<GreenSummary>> {
    let mut table = Table::new(&["kind", "label", "exact", "estimate", "se", "z"]);

    // closed forms on tiny sets go through the dense solve
    let single = GreenOperator::dense(from_sites(vec![(0, 0)])?, DEFAULT_DENSE_CAP)?;
    let singleton = single.entry(0, 0)?;
    table.push(row!["singleton", "(0;0)", 1.0, singleton, 0.0, f64::NAN]);

    let pair = GreenOperator::dense(from_sites(vec![(0, 0), (1, 0)])?, DEFAULT_DENSE_CAP)?;
    let (d, o) = (pair.entry(0, 0)?, pair.entry(0, 1)?);
    table.push(row!["pair", "(0;0)-(0;0)", 16.0 / 15.0, d, 0.0, f64::NAN]);
    table.push(row!["pair", "(0;0)-(1;0)", 4.0 / 15.0, o, 0.0, f64::NAN]);
    let pair_error = (d - 16.0 / 15.0).abs().max((o - 4.0 / 15.0).abs());

    let w = cfg.box_side as i64;
    if w < 1 {
        return Err(bad("box_side must be positive"));
    }
    let boxed = from_sites((0..w).flat_map(|y| (0..w).map(move |x| (x, y))).collect())?;
    let g = green(boxed)?;
    let mut pick = rng::seeded(aux_seed(cfg.seed, 0));
    let pairs: Vec<((i64, i64), (i64, i64))> = (0..cfg.entries)
        .map(|_| {
            let x = (pick.random_range(0..w), pick.random_range(0..w));
            let y = (pick.random_range(0..w), pick.random_range(0..w));
            (x, y)
        })
        .collect();
    let walk_entries = map_replicas(cfg.seed, pairs.len(), |i, seed| -> Result<WalkEntry> {
        let (x, y) = pairs[i];
        let (estimate, se) = walk_visits(w, x, y, cfg.walks, seed);
        let exact = g.entry_at(x, y)?;
        Ok(WalkEntry { x, y, exact, estimate, se, z: (estimate - exact) / se })
    })?;
    for e in &walk_entries {
        let label = format!("({};{})-({};{})", e.x.0, e.x.1, e.y.0, e.y.1);
        table.push(row!["walk", label, e.exact, e.estimate, e.se, e.z]);
    }
    let walk_max_abs_z = walk_entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max);

    let mut center_green = Vec::new();
    for &n in &cfg.sizes {
        let dom = domain(cfg, n)?;
        let c = dom.center_site();
        let v = green(dom)?.entry_at(c, c)?;
        table.push(row!["center", format!("N={n}"), f64::NAN, v, 0.0, f64::NAN]);
        center_green.push(v);
    }
    let mut increments = Vec::new();
    let mut increment_targets = Vec::new();
    for i in 1..cfg.sizes.len() {
        let inc = center_green[i] - center_green[i - 1];
        let target = G * (cfg.sizes[i] as f64 / cfg.sizes[i - 1] as f64).ln();
        let label = format!("N={}/{}", cfg.sizes[i], cfg.sizes[i - 1]);
        table.push(row!["increment", label, target, inc, 0.0, f64::NAN]);
        increments.push(inc);
        increment_targets.push(target);
    }
    let max_relative_increment_error =
        increments.iter().zip(&increment_targets).map(|(a, t)| ((a - t) / t).abs()).fold(0.0, f64::max);

    Ok(Outcome::new(
        GreenSummary {
            singleton,
            pair_diagonal: d,
            pair_off_diagonal: o,
            pair_error,
            box_side: cfg.box_side,
            walks: cfg.walks,
            walk_entries,
            walk_max_abs_z,
            sizes: cfg.sizes.clone(),
            center_green,
            increments,
            increment_targets,
            max_relative_increment_error,
        },
        table,
    ))
}
