//! Sampler fidelity: empirical covariance of exact-sampler draws against the
//! Green function, and exact against sine-basis marginals.

use clqg_core::gff::{green, ExactSampler, FieldLaw, SpectralSampler};
use clqg_core::rng;
use clqg_core::stats::ks_two_sample;
use rand::Rng;
use serde::Serialize;

use super::domain;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{Outcome, Table};
use crate::replicas::{aux_seed, derive_seed, fold_replicas};
use crate::row;

#[derive(Debug, Clone, Serialize)]
pub struct OffDiagonal {
    pub x: (i64, i64),
    pub y: (i64, i64),
    pub green: f64,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldStatsSummary {
    #[serde(rename = "N")]
    pub n: u32,
    pub sites: usize,
    pub samples: usize,
    pub max_relative_diagonal_error: f64,
    pub mean_relative_diagonal_error: f64,
    /// Diagonal entries off by more than 5%.
    pub diagonal_over_5pct: usize,
    pub center_relative_error: f64,
    pub off_diagonal: Vec<OffDiagonal>,
    pub off_diagonal_max_abs_z: f64,
    pub ks_sites: Vec<(i64, i64)>,
    pub ks_p_values: Vec<f64>,
    pub ks_min_p: f64,
}

struct Acc {
    // the field is centred, so raw second moments estimate covariances
    sq: Vec<f64>,
    prod: Vec<f64>,
    prod_sq: Vec<f64>,
    exact_at: Vec<Vec<f64>>,
    spectral_at: Vec<Vec<f64>>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome<FieldStatsSummary>> {
    let dom = domain(cfg, cfg.n)?;
    let exact = ExactSampler::new(dom.clone())?;
    let spectral = SpectralSampler::new(dom.clone())?;
    let g = green(dom.clone())?;
    let len = dom.len();
    let mut pick = rng::seeded(aux_seed(cfg.seed, 0));
    let mut distinct = || {
        let i = pick.random_range(0..len);
        let mut j = pick.random_range(0..len - 1);
        if j >= i {
            j += 1;
        }
        (i, j)
    };
    let pairs: Vec<(usize, usize)> = if len > 1 { (0..cfg.check_sites).map(|_| distinct()).collect() } else { Vec::new() };
    let ks_sites: Vec<usize> = (0..cfg.check_sites).map(|_| pick.random_range(0..len)).collect();

    let acc = Acc {
        sq: vec![0.0; len],
        prod: vec![0.0; pairs.len()],
        prod_sq: vec![0.0; pairs.len()],
        exact_at: vec![Vec::with_capacity(cfg.replicas); ks_sites.len()],
        spectral_at: vec![Vec::with_capacity(cfg.replicas); ks_sites.len()],
    };
    let mut first = None;
    let acc = fold_replicas(
        cfg.seed,
        cfg.replicas,
        64,
        acc,
        |_, seed| -> Result<_> {
            let e = exact.sample(derive_seed(seed, 0));
            let s = spectral.sample(derive_seed(seed, 1));
            Ok((e, ks_sites.iter().map(|&k| s.values[k]).collect::<Vec<_>>()))
        },
        |acc, i, (e, s)| {
            for (q, v) in acc.sq.iter_mut().zip(&e.values) {
                *q += v * v;
            }
            for (k, &(a, b)) in pairs.iter().enumerate() {
                let p = e.values[a] * e.values[b];
                acc.prod[k] += p;
                acc.prod_sq[k] += p * p;
            }
            for (k, &site) in ks_sites.iter().enumerate() {
                acc.exact_at[k].push(e.values[site]);
                acc.spectral_at[k].push(s[k]);
            }
            if i == 0 && cfg.save_field {
                first = Some(e);
            }
        },
    )?;

    let r = cfg.replicas as f64;
    let mut table = Table::new(&["kind", "x", "y", "green", "estimate", "se", "statistic"]);
    let mut rel = Vec::with_capacity(len);
    for i in 0..len {
        let gii = g.entry(i, i)?;
        let est = acc.sq[i] / r;
        rel.push((est / gii - 1.0).abs());
        let s = dom.sites().site(i);
        table.push(row!["diagonal", format!("{};{}", s.0, s.1), "", gii, est, gii * (2.0 / r).sqrt(), est / gii - 1.0]);
    }
    let mut off_diagonal = Vec::new();
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let estimate = acc.prod[k] / r;
        let se = ((acc.prod_sq[k] / r - estimate * estimate) / r).sqrt();
        let gab = g.entry(a, b)?;
        let (x, y) = (dom.sites().site(a), dom.sites().site(b));
        let z = (estimate - gab) / se;
        table.push(row!["off-diagonal", format!("{};{}", x.0, x.1), format!("{};{}", y.0, y.1), gab, estimate, se, z]);
        off_diagonal.push(OffDiagonal { x, y, green: gab, estimate, se, z });
    }
    let mut ks_p_values = Vec::new();
    for (k, &site) in ks_sites.iter().enumerate() {
        let p = ks_two_sample(&acc.exact_at[k], &acc.spectral_at[k]).p_value;
        let s = dom.sites().site(site);
        table.push(row!["ks", format!("{};{}", s.0, s.1), "", g.entry(site, site)?, f64::NAN, f64::NAN, p]);
        ks_p_values.push(p);
    }
    let summary = FieldStatsSummary {
        n: cfg.n,
        sites: len,
        samples: cfg.replicas,
        max_relative_diagonal_error: rel.iter().cloned().fold(0.0, f64::max),
        mean_relative_diagonal_error: rel.iter().sum::<f64>() / len as f64,
        diagonal_over_5pct: rel.iter().filter(|&&e| e > 0.05).count(),
        center_relative_error: rel[dom.index_of(dom.center_site()).expect("centre is a site")],
        off_diagonal_max_abs_z: off_diagonal.iter().map(|o| o.z.abs()).fold(0.0, f64::max),
        off_diagonal,
        ks_sites: ks_sites.iter().map(|&i| dom.sites().site(i)).collect(),
        ks_min_p: ks_p_values.iter().cloned().fold(1.0, f64::min),
        ks_p_values,
    };
    let mut out = Outcome::new(summary, table);
    if let Some(f) = first {
        out.fields.push(("field.bin".into(), f));
    }
    Ok(out)
}
