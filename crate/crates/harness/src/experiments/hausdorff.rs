//! Fixtures with known dimension and known Lebesgue densities.

use clqg_core::chaos::AtomicMeasure;
use clqg_core::gauge::PowerGauge;
use clqg_core::hausdorff::{dim_estimate, rogers_taylor_classify, DensityClass, PlaneSet, DEFAULT_CLASS_FRACTION};
use clqg_core::rng;
use rand::Rng;
use serde::Serialize;

use super::domain;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Outcome, Table};
use crate::replicas::aux_seed;
use crate::row;

#[derive(Debug, Clone, Serialize)]
pub struct HausdorffSummary {
    pub levels: (u32, u32),
    pub segment: f64,
    pub square: f64,
    pub cantor_depth: u32,
    pub cantor: f64,
    pub cantor_exact: f64,
    #[serde(rename = "N")]
    pub n: u32,
    pub radii: Vec<f64>,
    pub points: usize,
    /// Lebesgue measure against `r²` and `r³`.
    pub lebesgue_r2: DensityClass,
    pub lebesgue_r3: DensityClass,
    pub median_ratio_r2: f64,
    pub median_ratio_r3: f64,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome<HausdorffSummary>> {
    let levels = cfg.level_min..=cfg.level_max;
    let segment = dim_estimate(&PlaneSet::unit_segment(), levels.clone())?;
    let square = dim_estimate(&PlaneSet::unit_square(), levels.clone())?;
    let cantor = dim_estimate(&PlaneSet::cantor_dust(cfg.cantor_depth), levels)?;
    let cantor_exact = 2.0 * 2f64.ln() / 3f64.ln();

    let dom = domain(cfg, cfg.n)?;
    let m = AtomicMeasure::lebesgue(dom);
    let k_hi = cfg.k_max.unwrap_or(((cfg.n as f64).ln().floor() as u32).saturating_sub(1));
    let radii: Vec<f64> = (2..=k_hi.max(2)).map(|k| (-(k as f64)).exp()).collect();
    let mut r = rng::seeded(aux_seed(cfg.seed, 0));
    let points: Vec<(f64, f64)> =
        (0..cfg.points).map(|_| (r.random_range(0.1..0.9), r.random_range(0.1..0.9))).collect();
    let classify = |s: f64| {
        rogers_taylor_classify(&m, &points, &PowerGauge { s }, &radii, cfg.t_low, cfg.t_high, DEFAULT_CLASS_FRACTION)
    };
    let (r2, r3) = (classify(2.0)?, classify(3.0)?);

    let mut table = Table::new(&["fixture", "estimate", "reference"]);
    table.push(row!["segment-dimension", segment, 1.0]);
    table.push(row!["square-dimension", square, 2.0]);
    table.push(row!["cantor-dimension", cantor, cantor_exact]);
    table.push(row!["lebesgue-r2", format!("{:?}", r2.classification), "not MeasureInfinite"]);
    table.push(row!["lebesgue-r3", format!("{:?}", r3.classification), "MeasureInfinite"]);
    Ok(Outcome::new(
        HausdorffSummary {
            levels: (cfg.level_min, cfg.level_max),
            segment,
            square,
            cantor_depth: cfg.cantor_depth,
            cantor,
            cantor_exact,
            n: cfg.n,
            radii,
            points: cfg.points,
            lebesgue_r2: r2.classification,
            lebesgue_r3: r3.classification,
            median_ratio_r2: clqg_core::stats::median(&r2.ratios),
            median_ratio_r3: clqg_core::stats::median(&r3.ratios),
        },
        table,
    ))
}
