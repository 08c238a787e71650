//! Masses of shrinking balls around a point drawn from the measure: the
//! root-log decay and the gauge dichotomy.

use clqg_core::chaos::{build_measure, draw_point, BallMeasure};
use clqg_core::gauge::{eval_phi, MotooClass};
use clqg_core::stats::{least_squares, median, spearman};
use serde::Serialize;

use super::{bad, domain, k_max, law};
use crate::config::{ExperimentConfig, GaugeSpec};
use crate::error::Result;
use crate::output::{Outcome, Table};
use crate::replicas::{derive_seed, map_replicas};
use crate::row;

/// `M_k = Z(B(X̂, e^{−k}))` for one replica, `k = 2..=k_max`.
#[derive(Debug, Clone)]
pub struct BallMasses {
    pub seed: u64,
    pub point: (f64, f64),
    pub masses: Vec<f64>,
}

/// Recorded radii `k = 2..=k_hi` and the analysed window `k_min..=k_hi`.
fn k_window(cfg: &ExperimentConfig) -> Result<(u32, u32)> {
    let k_hi = cfg.k_max.unwrap_or_else(|| k_max(cfg.n, cfg.delta));
    if k_hi < cfg.k_min.max(2) {
        return Err(bad(format!("k range {}..={} is empty at N = {}", cfg.k_min.max(2), k_hi, cfg.n)));
    }
    Ok((cfg.k_min.max(2), k_hi))
}

pub fn ball_masses(cfg: &ExperimentConfig) -> Result<Vec<BallMasses>> {
    let (_, k_hi) = k_window(cfg)?;
    let dom = domain(cfg, cfg.n)?;
    let law = law(&dom)?;
    map_replicas(cfg.seed, cfg.replicas, |_, seed| -> Result<BallMasses> {
        let f = law.sample(derive_seed(seed, 0));
        let m = build_measure(&f)?;
        let point = draw_point(&m, derive_seed(seed, 1))?.position(cfg.n);
        let masses = (2..=k_hi).map(|k| m.ball_mass(point, (-(k as f64)).exp())).collect();
        Ok(BallMasses { seed, point, masses })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BallDecaySummary {
    #[serde(rename = "N")]
    pub n: u32,
    pub replicas: usize,
    pub k: Vec<u32>,
    pub median_neg_log_mass: Vec<f64>,
    /// Slope of `log(median −log M_k)` against `log k` over `fit_k_min..=fit_k_max`.
    pub slope: f64,
    pub intercept: f64,
    pub fit_k_min: u32,
    pub fit_k_max: u32,
}

pub fn run_ball_decay(cfg: &ExperimentConfig) -> Result<Outcome<BallDecaySummary>> {
    let (k_lo, k_hi) = k_window(cfg)?;
    let reps = ball_masses(cfg)?;
    let ks: Vec<u32> = (2..=k_hi).collect();
    let mut cols = vec!["replica".to_string(), "seed".into(), "x".into(), "y".into()];
    cols.extend(ks.iter().map(|k| format!("M_{k}")));
    let mut table = Table::new(&cols.iter().map(String::as_str).collect::<Vec<_>>());
    for (i, r) in reps.iter().enumerate() {
        let mut line = row![i, r.seed, r.point.0, r.point.1];
        line.extend(r.masses.iter().map(|m| crate::output::Cell::cell(m)));
        table.push(line);
    }
    let med: Vec<f64> =
        (0..ks.len()).map(|j| median(&reps.iter().map(|r| -r.masses[j].ln()).collect::<Vec<_>>())).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = ks
        .iter()
        .zip(&med)
        .filter(|(k, _)| (k_lo..=k_hi).contains(*k))
        .map(|(&k, &m)| ((k as f64).ln(), m.ln()))
        .unzip();
    let fit = least_squares(&x, &y);
    let (slope, intercept) = if x.len() >= 2 { (fit.slope, fit.intercept) } else { (f64::NAN, f64::NAN) };
    Ok(Outcome::new(
        BallDecaySummary {
            n: cfg.n,
            replicas: cfg.replicas,
            k: ks,
            median_neg_log_mass: med,
            slope,
            intercept,
            fit_k_min: k_lo,
            fit_k_max: k_hi,
        },
        table,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Flat,
}

/// `ρ > 0.5` is increasing, `ρ < −0.5` decreasing.
pub fn trend(rho: f64) -> Trend {
    if rho > 0.5 {
        Trend::Increasing
    } else if rho < -0.5 {
        Trend::Decreasing
    } else {
        Trend::Flat
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaugeTrend {
    pub label: String,
    pub theta: Option<f64>,
    pub class: MotooClass,
    pub phi: Vec<f64>,
    pub median_ratio: Vec<f64>,
    pub spearman: f64,
    pub trend: Trend,
    /// Share of replicas with `max_k R_k` above the threshold.
    pub fraction_above_threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomySummary {
    #[serde(rename = "N")]
    pub n: u32,
    pub replicas: usize,
    pub k: Vec<u32>,
    pub threshold: f64,
    pub gauges: Vec<GaugeTrend>,
}

pub fn run_dichotomy(cfg: &ExperimentConfig) -> Result<Outcome<DichotomySummary>> {
    let (k_lo, k_hi) = k_window(cfg)?;
    let reps = ball_masses(cfg)?;
    let ks: Vec<u32> = (k_lo..=k_hi).collect();
    let offset = (k_lo - 2) as usize;
    let mut table = Table::new(&["replica", "seed", "gauge", "k", "M_k", "R_k"]);
    let mut gauges = Vec::new();
    for (label, spec) in [("gauge", &cfg.gauge), ("alt_gauge", &cfg.alt_gauge)] {
        gauges.push(gauge_trend(label, spec, &reps, &ks, offset, cfg.threshold, &mut table)?);
    }
    Ok(Outcome::new(DichotomySummary { n: cfg.n, replicas: cfg.replicas, k: ks, threshold: cfg.threshold, gauges }, table))
}

fn gauge_trend(
    label: &str,
    spec: &GaugeSpec,
    reps: &[BallMasses],
    ks: &[u32],
    offset: usize,
    threshold: f64,
    table: &mut Table,
) -> Result<GaugeTrend> {
    let g = spec.build()?;
    let phi: Vec<f64> = ks.iter().map(|&k| eval_phi(&g, (-(k as f64)).exp())).collect::<Result<_, _>>()?;
    let ratios: Vec<Vec<f64>> =
        reps.iter().map(|r| phi.iter().enumerate().map(|(j, p)| r.masses[offset + j] / p).collect()).collect();
    for (i, (r, rs)) in reps.iter().zip(&ratios).enumerate() {
        for (j, &k) in ks.iter().enumerate() {
            table.push(row![i, r.seed, label, k, r.masses[offset + j], rs[j]]);
        }
    }
    let median_ratio: Vec<f64> =
        (0..ks.len()).map(|j| median(&ratios.iter().map(|r| r[j]).collect::<Vec<_>>())).collect();
    let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let rho = if ks.len() >= 2 { spearman(&kf, &median_ratio) } else { f64::NAN };
    let above = ratios.iter().filter(|r| r.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > threshold).count();
    Ok(GaugeTrend {
        label: label.into(),
        theta: spec.theta(),
        class: g.classify(),
        phi,
        median_ratio,
        spearman: rho,
        trend: trend(rho),
        fraction_above_threshold: above as f64 / reps.len() as f64,
    })
}
