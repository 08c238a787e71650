//! Upper tail of the maximum: `P(max h > m_N + u)` over a grid of `u`.

use clqg_core::chaos::{alpha, centering};
use clqg_core::stats::least_squares;
use serde::Serialize;

use super::{domain, law};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Outcome, Table};
use crate::replicas::map_replicas;
use crate::row;

#[derive(Debug, Clone, Serialize)]
pub struct MaxTailSummary {
    #[serde(rename = "N")]
    pub n: u32,
    pub replicas: usize,
    pub m_n: f64,
    pub u_grid: Vec<f64>,
    pub exceedances: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub nonincreasing: bool,
    /// Slope of `log(P/u)` against `u`; the tail is `≍ u e^{−αu}`.
    pub slope: f64,
    /// Slope of `log P` against `u`.
    pub raw_slope: f64,
    pub target: f64,
    pub relative_error: f64,
    pub fit_points: usize,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome<MaxTailSummary>> {
    let dom = domain(cfg, cfg.n)?;
    let law = law(&dom)?;
    let m_n = centering(cfg.n as f64);
    let excess = map_replicas(cfg.seed, cfg.replicas, |_, seed| -> Result<f64> { Ok(law.sample(seed).max() - m_n) })?;
    let r = cfg.replicas as f64;
    let mut table = Table::new(&["u", "exceedances", "frequency", "se"]);
    let mut exceedances = Vec::new();
    let mut frequencies = Vec::new();
    for &u in &cfg.u_grid {
        let c = excess.iter().filter(|&&x| x > u).count();
        let p = c as f64 / r;
        table.push(row![u, c, p, (p * (1.0 - p) / r).sqrt()]);
        exceedances.push(c);
        frequencies.push(p);
    }
    let (us, ps): (Vec<f64>, Vec<f64>) =
        cfg.u_grid.iter().zip(&frequencies).filter(|(u, p)| **p > 0.0 && **u > 0.0).map(|(u, p)| (*u, *p)).unzip();
    let (slope, raw_slope) = if us.len() >= 2 {
        let y: Vec<f64> = us.iter().zip(&ps).map(|(u, p)| (p / u).ln()).collect();
        let raw: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
        (least_squares(&us, &y).slope, least_squares(&us, &raw).slope)
    } else {
        (f64::NAN, f64::NAN)
    };
    let target = -alpha();
    let summary = MaxTailSummary {
        n: cfg.n,
        replicas: cfg.replicas,
        m_n,
        u_grid: cfg.u_grid.clone(),
        nonincreasing: exceedances.windows(2).all(|w| w[1] <= w[0]),
        exceedances,
        frequencies,
        slope,
        raw_slope,
        target,
        relative_error: ((slope - target) / target).abs(),
        fit_points: us.len(),
    };
    let mut out = Outcome::new(summary, table);
    if cfg.save_field {
        out.fields.push(("field.bin".into(), law.sample(crate::replicas::derive_seed(cfg.seed, 0))));
    }
    Ok(out)
}
