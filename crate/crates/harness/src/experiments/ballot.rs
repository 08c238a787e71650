//! Ballot-type estimate: the chance that the field stays below `m_N + u`
//! given a low value at the root, rescaled by `√log N/(1 + t)`.

use clqg_core::chaos::centering;
use clqg_core::gff::{filter_max, RootConditioner};
use clqg_core::lattice::delta_interior;
use clqg_core::stats::spearman;
use clqg_core::Error;
use serde::Serialize;

use super::{bad, domain, law};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Outcome, Table};
use crate::replicas::{derive_seed, map_replicas};
use crate::row;

#[derive(Debug, Clone, Serialize)]
pub struct BallotCell {
    #[serde(rename = "N")]
    pub n: u32,
    pub t: f64,
    /// Root value `m_N − t√log N`.
    pub root_value: f64,
    pub accepted: usize,
    pub probability: f64,
    /// `√log N · P/(1 + t)`.
    pub statistic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BallotSummary {
    pub u: f64,
    pub replicas: usize,
    pub cells: Vec<BallotCell>,
    /// Spearman correlation of `P` with `t` at each size.
    pub spearman_by_size: Vec<f64>,
    /// Statistic at the largest size over the smallest, per `t`.
    pub ratio_last_first: Vec<f64>,
    /// Largest max/min ratio of the statistic across sizes at fixed `t`.
    pub spread: f64,
    pub spread_tolerance: f64,
    pub flat: bool,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome<BallotSummary>> {
    if cfg.t_grid.is_empty() || cfg.t_grid.iter().any(|&t| !(0.0..=cfg.a).contains(&t)) {
        return Err(bad(format!("t_grid must be a nonempty subset of [0, a] = [0, {}]", cfg.a)));
    }
    if cfg.sizes.is_empty() {
        return Err(bad("sizes must not be empty"));
    }
    let mut cells = Vec::new();
    let mut table = Table::new(&["N", "t", "root_value", "accepted", "probability", "statistic"]);
    for (j, &n) in cfg.sizes.iter().enumerate() {
        let dom = domain(cfg, n)?;
        let root = dom.center_site();
        if !delta_interior(&dom, cfg.delta).contains(&root) {
            return Err(Error::RootTooClose { root }.into());
        }
        let law = law(&dom)?;
        let cond = RootConditioner::new(&*law, root)?;
        let (m, sl) = (centering(n as f64), (n as f64).ln().sqrt());
        let cap = m + cfg.u;
        let values: Vec<f64> = cfg.t_grid.iter().map(|t| m - t * sl).collect();
        let hits = map_replicas(derive_seed(cfg.seed, j as u64), cfg.replicas, |_, seed| -> Result<Vec<bool>> {
            let f = law.sample(seed);
            Ok(values.iter().map(|&a| filter_max(&cond.pin(f.clone(), a), cap)).collect())
        })?;
        for (k, (&t, &a)) in cfg.t_grid.iter().zip(&values).enumerate() {
            let accepted = hits.iter().filter(|h| h[k]).count();
            if accepted == 0 {
                return Err(Error::RejectionBudgetExhausted { proposals: cfg.replicas as u64, accepted: 0 }.into());
            }
            let p = accepted as f64 / cfg.replicas as f64;
            let cell = BallotCell { n, t, root_value: a, accepted, probability: p, statistic: sl * p / (1.0 + t) };
            table.push(row![n, t, a, accepted, p, cell.statistic]);
            cells.push(cell);
        }
    }
    let nt = cfg.t_grid.len();
    let by_size: Vec<&[BallotCell]> = cells.chunks(nt).collect();
    let spearman_by_size = by_size
        .iter()
        .map(|c| {
            if nt < 2 {
                return f64::NAN;
            }
            spearman(&cfg.t_grid, &c.iter().map(|x| x.probability).collect::<Vec<_>>())
        })
        .collect();
    let (first, last) = (by_size[0], by_size[by_size.len() - 1]);
    let ratio_last_first = (0..nt).map(|k| last[k].statistic / first[k].statistic).collect();
    let spread = (0..nt)
        .map(|k| {
            let s: Vec<f64> = by_size.iter().map(|c| c[k].statistic).collect();
            s.iter().cloned().fold(0.0, f64::max) / s.iter().cloned().fold(f64::INFINITY, f64::min)
        })
        .fold(1.0, f64::max);
    Ok(Outcome::new(
        BallotSummary {
            u: cfg.u,
            replicas: cfg.replicas,
            cells,
            spearman_by_size,
            ratio_last_first,
            spread,
            spread_tolerance: cfg.spread_tolerance,
            flat: spread <= cfg.spread_tolerance,
        },
        table,
    ))
}
