//! Height of the field at a point drawn from the normalized measure.

use clqg_core::chaos::{build_measure, draw_point, near_extremal_statistic, G};
use serde::Serialize;

use super::{domain, law};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Outcome, Table};
use crate::replicas::{derive_seed, map_replicas};
use crate::row;

#[derive(Debug, Clone, Serialize)]
pub struct NearExtremalSummary {
    #[serde(rename = "N")]
    pub n: u32,
    pub replicas: usize,
    pub a: f64,
    /// Share of replicas with `(m_N − h(X̂))/√log N ∉ [0, a]`.
    pub fraction_outside: f64,
    pub se: f64,
    /// `e^{−a²/(2g)}`.
    pub limit: f64,
    pub mean_statistic: f64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome<NearExtremalSummary>> {
    let dom = domain(cfg, cfg.n)?;
    let law = law(&dom)?;
    let draws = map_replicas(cfg.seed, cfg.replicas, |_, seed| -> Result<_> {
        let f = law.sample(derive_seed(seed, 0));
        let m = build_measure(&f)?;
        let d = draw_point(&m, derive_seed(seed, 1))?;
        Ok((seed, d.position(cfg.n), near_extremal_statistic(&f, &d)))
    })?;
    let mut table = Table::new(&["replica", "seed", "x", "y", "statistic", "outside"]);
    let mut outside = 0usize;
    let mut total = 0.0;
    for (i, &(seed, (x, y), s)) in draws.iter().enumerate() {
        let out = !(0.0..=cfg.a).contains(&s);
        outside += out as usize;
        total += s;
        table.push(row![i, seed, x, y, s, out]);
    }
    let r = cfg.replicas as f64;
    let p = outside as f64 / r;
    Ok(Outcome::new(
        NearExtremalSummary {
            n: cfg.n,
            replicas: cfg.replicas,
            a: cfg.a,
            fraction_outside: p,
            se: (p * (1.0 - p) / r).sqrt(),
            limit: (-cfg.a * cfg.a / (2.0 * G)).exp(),
            mean_statistic: total / r,
        },
        table,
    ))
}
