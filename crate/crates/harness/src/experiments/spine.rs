//! Spine walk at the domain centre: deterministic step variances, their
//! Monte Carlo counterparts and the annulus control variables `Ξ_k`.

use clqg_core::chaos::{alpha, build_measure};
use clqg_core::concentric::{step_variances, ConcentricStats, SpineOperator};
use clqg_core::gff::{green, FieldLaw, SpectralSampler};
use clqg_core::lattice::build_frame;
use clqg_core::stats::{median, variance};
use serde::Serialize;

use super::domain;
use crate::config::{ExperimentConfig, SpineMode};
use crate::error::Result;
use crate::output::{Outcome, Table};
use crate::replicas::map_replicas;
use crate::row;

#[derive(Debug, Clone, Serialize)]
pub struct SpineSummary {
    #[serde(rename = "N")]
    pub n: u32,
    pub depth: u32,
    pub replicas: usize,
    pub mode: SpineMode,
    pub t: Vec<f64>,
    /// `max |t_k − 4k|` over `2 ≤ k ≤ n − 2`.
    pub t_minus_4k_max: f64,
    pub mc_variance: Vec<f64>,
    pub mc_relative_error: Vec<f64>,
    pub tight_exponent: f64,
    /// `P(|Ξ_k| > k^p)` for `k = 0..=n` (field mode, `k ≥ 1`).
    pub xi_exceed_fraction: Vec<Option<f64>>,
    pub xi_median: Vec<Option<f64>>,
    /// Replica counts of each value of `K(η, ℓ)`.
    pub k_control_counts: Vec<usize>,
}

struct Replica {
    s: Vec<f64>,
    xi: Vec<Option<f64>>,
    k_control: Option<u32>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome<SpineSummary>> {
    let dom = domain(cfg, cfg.n)?;
    let frame = build_frame(&dom, dom.center_site(), cfg.delta)?;
    let n = frame.depth();
    let t = step_variances(&green(dom.clone())?, &frame)?;
    let law = SpectralSampler::new(dom.clone())?;
    let op = SpineOperator::new(&frame, dom.sites())?;
    let reps: Vec<Replica> = match cfg.spine_mode {
        SpineMode::Projection => {
            let rows = op.noise_functionals(&law);
            map_replicas(cfg.seed, cfg.replicas, |_, seed| -> Result<Replica> {
                let z = law.noise(seed);
                let s = rows.iter().map(|v| v.iter().zip(&z).map(|(a, b)| a * b).sum()).collect();
                Ok(Replica { s, xi: Vec::new(), k_control: None })
            })?
        }
        SpineMode::Field => map_replicas(cfg.seed, cfg.replicas, |_, seed| -> Result<Replica> {
            let f = law.sample(seed);
            let m = build_measure(&f)?;
            let st = ConcentricStats::compute(&m, op.apply(&f.values), &t, &frame, cfg.eta, cfg.ell)?;
            Ok(Replica { s: st.s, xi: st.xi, k_control: Some(st.k_control) })
        })?,
    };

    let a = alpha();
    let nk = n as usize + 1;
    let mc_variance: Vec<f64> =
        (0..nk).map(|k| variance(&reps.iter().map(|r| a * r.s[k]).collect::<Vec<_>>())).collect();
    let mc_relative_error: Vec<f64> =
        (0..nk).map(|k| if t[k] > 0.0 { (mc_variance[k] / t[k] - 1.0).abs() } else { f64::NAN }).collect();
    let field_mode = cfg.spine_mode == SpineMode::Field;
    let mut xi_exceed_fraction = vec![None; nk];
    let mut xi_median = vec![None; nk];
    if field_mode {
        for k in 1..nk {
            let vals: Vec<f64> = reps.iter().filter_map(|r| r.xi[k]).collect();
            let bound = (k as f64).powf(cfg.tight_exponent);
            // a missing Ξ_k (empty annulus) counts as an exceedance
            let over = reps.iter().filter(|r| r.xi[k].is_none_or(|x| x.abs() > bound)).count();
            xi_exceed_fraction[k] = Some(over as f64 / reps.len() as f64);
            xi_median[k] = (!vals.is_empty()).then(|| median(&vals));
        }
    }
    let mut k_control_counts = Vec::new();
    for k in reps.iter().filter_map(|r| r.k_control) {
        if k_control_counts.len() <= k as usize {
            k_control_counts.resize(k as usize + 1, 0);
        }
        k_control_counts[k as usize] += 1;
    }
    let t_minus_4k_max = (2..=n.saturating_sub(2) as usize)
        .map(|k| (t[k] - 4.0 * k as f64).abs())
        .fold(f64::NAN, f64::max);

    let mut table = Table::new(&["k", "t", "t_minus_4k", "mc_variance", "relative_error", "xi_exceed", "xi_median"]);
    for k in 0..nk {
        table.push(row![k, t[k], t[k] - 4.0 * k as f64, mc_variance[k], mc_relative_error[k], xi_exceed_fraction[k], xi_median[k]]);
    }
    let mut out = Outcome::new(
        SpineSummary {
            n: cfg.n,
            depth: n,
            replicas: cfg.replicas,
            mode: cfg.spine_mode,
            t,
            t_minus_4k_max,
            mc_variance,
            mc_relative_error,
            tight_exponent: cfg.tight_exponent,
            xi_exceed_fraction,
            xi_median,
            k_control_counts,
        },
        table,
    );
    if cfg.save_field {
        out.fields.push(("field.bin".into(), law.sample(crate::replicas::derive_seed(cfg.seed, 0))));
    }
    Ok(out)
}
