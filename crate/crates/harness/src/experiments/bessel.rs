//! Bessel-process experiments: the Motoo barrier test, coupled domination
//! and the bridge-to-Bessel limit.

use clqg_core::bessel::{
    bridge_to_bessel_check, domination_check, motoo_fractions, BridgeLimitReport, DominationReport, MotooReport,
    MotooResolution,
};
use clqg_core::gauge::{eval_gamma, MotooClass};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Outcome, Table};
use crate::row;

#[derive(Debug, Clone, Serialize)]
pub struct MotooSummary {
    pub class: MotooClass,
    pub report: MotooReport,
    /// `fraction(T_last) − fraction(T_first)`.
    pub change: f64,
    /// `fraction(T_last) / fraction(T_first)`.
    pub ratio: f64,
}

pub fn run_motoo(cfg: &ExperimentConfig) -> Result<Outcome<MotooSummary>> {
    let g = cfg.gauge.build()?;
    let res = MotooResolution::default();
    let gamma = |t: f64| eval_gamma(&g, t).unwrap_or(f64::INFINITY);
    let fractions = motoo_fractions(gamma, &cfg.horizons, cfg.t_start, cfg.replicas, cfg.seed, res)?;
    let mut table = Table::new(&["horizon", "fraction", "se"]);
    let r = cfg.replicas as f64;
    for (h, f) in cfg.horizons.iter().zip(&fractions) {
        table.push(row![*h, *f, (f * (1.0 - f) / r).sqrt()]);
    }
    let (first, last) = (fractions[0], fractions[fractions.len() - 1]);
    let report = MotooReport {
        theta: cfg.gauge.theta(),
        horizons: cfg.horizons.clone(),
        fractions,
        t_start: cfg.t_start,
        n_paths: cfg.replicas,
        resolution: res,
    };
    Ok(Outcome::new(MotooSummary { class: g.classify(), report, change: last - first, ratio: last / first }, table))
}

pub fn run_domination(cfg: &ExperimentConfig) -> Result<Outcome<DominationReport>> {
    let report = domination_check(cfg.v, cfg.horizon, cfg.replicas, cfg.grid_step, cfg.seed)?;
    let mut table = Table::new(&["functional", "threshold", "p_shifted", "p_zero", "se", "holds"]);
    for c in &report.checks {
        table.push(row![c.functional.as_str(), c.threshold, c.p_shifted, c.p_zero, c.se, c.holds]);
    }
    Ok(Outcome::new(report, table))
}

pub fn run_bridge_limit(cfg: &ExperimentConfig) -> Result<Outcome<BridgeLimitReport>> {
    let report = bridge_to_bessel_check(
        cfg.v,
        cfg.b,
        cfg.endpoint,
        &cfg.lengths,
        cfg.replicas,
        cfg.grid_step,
        cfg.seed,
        cfg.budget,
    )?;
    let mut table = Table::new(&["length", "accepted", "proposals", "p_half", "p_full"]);
    for r in &report.rows {
        table.push(row![r.length, r.accepted, r.proposals, r.p_half, r.p_full]);
    }
    Ok(Outcome::new(report, table))
}
