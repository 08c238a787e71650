//! Three-dimensional Bessel processes, Brownian bridges above a barrier, the
//! Motoo stay-above fraction, and empirical checks of the domination and
//! bridge-limit lemmas.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{eval_gamma, GaugeTriple};
use crate::rng;
use crate::stats::{ks_two_sample, mean, variance};

/// Default proposal budget of the rejection samplers.
pub const DEFAULT_REJECTION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PathKind {
    Brownian,
    Bessel3 { start: f64 },
    BridgeAboveBarrier { v: f64, endpoint: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: PathKind,
}

impl PathSample {
    /// CSV rows `t,value`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("t,value\n");
        for (t, v) in self.grid.iter().zip(&self.values) {
            let _ = writeln!(out, "{t:e},{v:e}");
        }
        out
    }

    /// Value at the grid point equal to `t` (to 1e-9).
    pub fn at(&self, t: f64) -> Option<f64> {
        grid_index(&self.grid, t).map(|i| self.values[i])
    }
}

fn grid_index(grid: &[f64], t: f64) -> Option<usize> {
    let i = grid.partition_point(|&s| s < t - 1e-9);
    (i < grid.len() && (grid[i] - t).abs() <= 1e-9).then_some(i)
}

/// `0, step, 2·step, …, t_end`, the last point exactly `t_end`.
pub fn uniform_grid(t_end: f64, step: f64) -> Vec<f64> {
    refined_grid(0.0, t_end, step, t_end, step)
}

/// Points from `t0` to `t_end`: spacing `fine` on `[t0, t0 + fine_span]`,
/// spacing `coarse` afterwards, always ending exactly at `t_end`.
pub fn refined_grid(t0: f64, t_end: f64, fine: f64, fine_span: f64, coarse: f64) -> Vec<f64> {
    assert!(fine > 0.0 && coarse > 0.0 && t_end >= t0);
    let mut g = Vec::new();
    let switch = (t0 + fine_span).min(t_end);
    let nf = ((switch - t0) / fine + 1e-9).floor() as u64;
    for i in 0..=nf {
        g.push(t0 + i as f64 * fine);
    }
    let base = *g.last().unwrap();
    let nc = ((t_end - base) / coarse + 1e-9).floor() as u64;
    for j in 1..=nc {
        g.push(base + j as f64 * coarse);
    }
    if t_end - g.last().unwrap() > 1e-9 {
        g.push(t_end);
    } else {
        *g.last_mut().unwrap() = t_end;
    }
    g
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid must be nonnegative and strictly increasing"));
    }
    Ok(())
}

fn normal(r: &mut rng::Rng) -> f64 {
    StandardNormal.sample(r)
}

/// One-dimensional Brownian motion from 0 at the grid times.
pub fn sample_brownian(grid: &[f64], seed: u64) -> Result<PathSample> {
    check_grid(grid)?;
    let mut r = rng::seeded(seed);
    let (mut t, mut w) = (0.0, 0.0);
    let values = grid
        .iter()
        .map(|&s| {
            w += (s - t).sqrt() * normal(&mut r);
            t = s;
            w
        })
        .collect();
    Ok(PathSample { grid: grid.to_vec(), values, kind: PathKind::Brownian })
}

/// `Y_t = |B³_t|` with `B³` a 3D Brownian motion from `(start, 0, 0)`, exact at
/// the grid times.
pub fn sample_bessel3(start: f64, grid: &[f64], seed: u64) -> Result<PathSample> {
    if !(start >= 0.0) {
        return Err(Error::DomainError(format!("Bessel start must be ≥ 0, got {start}")));
    }
    check_grid(grid)?;
    let mut r = rng::seeded(seed);
    let mut b = [start, 0.0, 0.0];
    let mut t = 0.0;
    let values = grid
        .iter()
        .map(|&s| {
            let sd = (s - t).sqrt();
            for c in &mut b {
                *c += sd * normal(&mut r);
            }
            t = s;
            norm3(&b)
        })
        .collect();
    Ok(PathSample { grid: grid.to_vec(), values, kind: PathKind::Bessel3 { start } })
}

fn norm3(b: &[f64; 3]) -> f64 {
    (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt()
}

fn bridge_grid(grid: &[f64]) -> Result<f64> {
    check_grid(grid)?;
    if grid[0] != 0.0 || grid.len() < 2 {
        return Err(Error::invalid("bridge grids start at 0 and have a positive length"));
    }
    Ok(*grid.last().unwrap())
}

/// Draws the bridge `0 → endpoint` forward, one conditional Gaussian step at a
/// time; stops early (returning `None`) once a value falls below `floor`.
fn bridge_forward(grid: &[f64], endpoint: f64, floor: f64, r: &mut rng::Rng) -> Option<Vec<f64>> {
    let t_end = *grid.last().unwrap();
    let mut values = Vec::with_capacity(grid.len());
    let mut x = 0.0;
    values.push(x);
    for w in grid.windows(2) {
        let (t, s) = (w[0], w[1]);
        let rest = t_end - t;
        let dt = s - t;
        let m = x + (endpoint - x) * dt / rest;
        let sd = (dt * (t_end - s) / rest).max(0.0).sqrt();
        x = if s == t_end { endpoint } else { m + sd * normal(r) };
        if x < floor {
            return None;
        }
        values.push(x);
    }
    Some(values)
}

/// Unconditioned Brownian bridge `0 → endpoint` on `[0, grid.last()]`.
pub fn sample_bridge(endpoint: f64, grid: &[f64], seed: u64) -> Result<PathSample> {
    bridge_grid(grid)?;
    let values = bridge_forward(grid, endpoint, f64::NEG_INFINITY, &mut rng::seeded(seed)).expect("no barrier");
    Ok(PathSample { grid: grid.to_vec(), values, kind: PathKind::Brownian })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeBatch {
    pub paths: Vec<PathSample>,
    pub proposals: u64,
}

impl BridgeBatch {
    pub fn acceptance_rate(&self) -> f64 {
        self.paths.len() as f64 / self.proposals as f64
    }
}

/// `count` bridges `0 → endpoint` staying `≥ −v` at every grid point, by
/// rejection from unconditioned bridges.
pub fn sample_bridges_above(
    v: f64,
    endpoint: f64,
    grid: &[f64],
    count: usize,
    seed: u64,
    max_proposals: u64,
) -> Result<BridgeBatch> {
    if !(v >= 0.0) || !(endpoint >= -v) {
        return Err(Error::DomainError(format!("need v ≥ 0 and endpoint ≥ −v, got v={v}, e={endpoint}")));
    }
    bridge_grid(grid)?;
    let mut r = rng::seeded(seed);
    let mut paths = Vec::with_capacity(count);
    let mut proposals = 0u64;
    while paths.len() < count {
        if proposals >= max_proposals {
            return Err(Error::RejectionBudgetExhausted { proposals, accepted: paths.len() as u64 });
        }
        proposals += 1;
        if let Some(values) = bridge_forward(grid, endpoint, -v, &mut r) {
            paths.push(PathSample { grid: grid.to_vec(), values, kind: PathKind::BridgeAboveBarrier { v, endpoint } });
        }
    }
    Ok(BridgeBatch { paths, proposals })
}

/// A single conditioned bridge on `[0, length]`; `grid` must end at `length`.
pub fn sample_bridge_above(
    v: f64,
    length: f64,
    endpoint: f64,
    grid: &[f64],
    seed: u64,
    max_rejects: u64,
) -> Result<(PathSample, f64)> {
    if (bridge_grid(grid)? - length).abs() > 1e-9 {
        return Err(Error::invalid("grid must end at the bridge length"));
    }
    let mut batch = sample_bridges_above(v, endpoint, grid, 1, seed, max_rejects)?;
    let rate = batch.acceptance_rate();
    Ok((batch.paths.pop().unwrap(), rate))
}

/// Grid of the Motoo experiment: spacing `fine` on `[t_start, t_start + fine_span]`
/// and `coarse` afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotooResolution {
    pub fine: f64,
    pub fine_span: f64,
    pub coarse: f64,
}

impl Default for MotooResolution {
    fn default() -> Self {
        MotooResolution { fine: 0.01, fine_span: 1.0, coarse: 0.1 }
    }
}

/// Fractions of Bessel-3-from-0 paths with `Y_t ≥ γ(t)` at every grid time in
/// `[t_start, T]`, for each horizon `T` (paths are shared, so the fractions are
/// nonincreasing in `T`).
pub fn motoo_fractions(
    gamma: impl Fn(f64) -> f64,
    horizons: &[f64],
    t_start: f64,
    n_paths: usize,
    seed: u64,
    res: MotooResolution,
) -> Result<Vec<f64>> {
    if horizons.is_empty() || horizons.iter().any(|&h| h < t_start) || !(t_start > 0.0) {
        return Err(Error::invalid("horizons must be ≥ t_start > 0"));
    }
    let t_max = horizons.iter().cloned().fold(0.0, f64::max);
    let grid = refined_grid(t_start, t_max, res.fine, res.fine_span, res.coarse);
    let barrier: Vec<f64> = grid.iter().map(|&t| gamma(t)).collect();
    let mut survived = vec![0usize; horizons.len()];
    for p in 0..n_paths {
        let mut r = rng::seeded(rng::derive_seed(seed, p as u64));
        let sd = t_start.sqrt();
        let mut b = [sd * normal(&mut r), sd * normal(&mut r), sd * normal(&mut r)];
        // time of the first grid failure
        let mut fail = f64::INFINITY;
        if norm3(&b) < barrier[0] {
            fail = grid[0];
        } else {
            for i in 1..grid.len() {
                let sd = (grid[i] - grid[i - 1]).sqrt();
                for c in &mut b {
                    *c += sd * normal(&mut r);
                }
                if norm3(&b) < barrier[i] {
                    fail = grid[i];
                    break;
                }
            }
        }
        for (h, s) in horizons.iter().zip(&mut survived) {
            if fail > *h {
                *s += 1;
            }
        }
    }
    Ok(survived.into_iter().map(|s| s as f64 / n_paths as f64).collect())
}

pub fn motoo_fraction(g: &GaugeTriple, t_horizon: f64, t_start: f64, n_paths: usize, seed: u64) -> Result<f64> {
    let gamma = |t: f64| eval_gamma(g, t).unwrap_or(f64::INFINITY);
    Ok(motoo_fractions(gamma, &[t_horizon], t_start, n_paths, seed, MotooResolution::default())?[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotooReport {
    pub theta: Option<f64>,
    pub horizons: Vec<f64>,
    pub fractions: Vec<f64>,
    pub t_start: f64,
    pub n_paths: usize,
    pub resolution: MotooResolution,
}

/// A pair `(Y⁰, Y^v)` of Bessel-3 paths driven by the same Brownian motion.
///
/// `Y⁰ = |B³|` is exact; `D = Y^v − Y⁰` solves `D' = −D / (Y⁰(Y⁰ + D))` with
/// `D(0) = v`, integrated by exponential Euler on substeps (geometrically
/// refined at the origin, where `Y⁰` vanishes).
pub fn coupled_bessel(v: f64, grid: &[f64], substeps: usize, seed: u64) -> Result<(PathSample, PathSample)> {
    check_grid(grid)?;
    let mut r = rng::seeded(seed);
    let mut b = [0.0f64; 3];
    let (mut t, mut y, mut d) = (0.0, 0.0, v);
    let mut advance = |to: f64, b: &mut [f64; 3], t: &mut f64, y: &mut f64, d: &mut f64| {
        let dt = to - *t;
        let sd = dt.sqrt();
        for c in b.iter_mut() {
            *c += sd * normal(&mut r);
        }
        let y1 = norm3(b);
        let ym = 0.5 * (*y + y1);
        if *d > 0.0 {
            *d *= (-dt / (ym * (ym + *d))).exp();
        }
        *t = to;
        *y = y1;
    };
    let (mut y0, mut yv) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
    for &s in grid {
        if s > t {
            let h = (s - t) / substeps as f64;
            if t == 0.0 {
                for k in (1..=40).rev() {
                    advance(h * 0.5f64.powi(k), &mut b, &mut t, &mut y, &mut d);
                }
            }
            let t0 = t;
            for j in 1..=substeps {
                let to = if j == substeps { s } else { t0 + j as f64 * (s - t0) / substeps as f64 };
                advance(to, &mut b, &mut t, &mut y, &mut d);
            }
        }
        y0.push(y);
        yv.push(y + d);
    }
    Ok((
        PathSample { grid: grid.to_vec(), values: y0, kind: PathKind::Bessel3 { start: 0.0 } },
        PathSample { grid: grid.to_vec(), values: yv, kind: PathKind::Bessel3 { start: v } },
    ))
}

/// `P(f(Y^v − v) > c) ≤ P(f(Y⁰) > c) + 3·SE` for one functional and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpwardSetCheck {
    pub functional: String,
    pub threshold: f64,
    pub p_shifted: f64,
    pub p_zero: f64,
    pub se: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub v: f64,
    pub horizon: f64,
    pub grid_step: f64,
    pub n_paths: usize,
    /// Grid points with `Y^v − v > Y⁰` or `Y⁰ > Y^v`.
    pub violations: u64,
    pub checks: Vec<UpwardSetCheck>,
    /// Mean and standard error of `Y^v_b − v`.
    pub shifted_end_mean: f64,
    pub shifted_end_se: f64,
    /// KS p-value of `Y^v_b` against exact `|B³|` started at `(v, 0, 0)`.
    pub law_p_value: f64,
}

pub fn domination_check(v: f64, horizon: f64, n_paths: usize, grid_step: f64, seed: u64) -> Result<DominationReport> {
    if !(v >= 0.0) {
        return Err(Error::DomainError(format!("v must be ≥ 0, got {v}")));
    }
    let grid = uniform_grid(horizon, grid_step);
    let mut violations = 0u64;
    let (mut min_s, mut min_0, mut end_s, mut end_0) = (vec![], vec![], vec![], vec![]);
    for p in 0..n_paths {
        let (y0, yv) = coupled_bessel(v, &grid, 16, rng::derive_seed(seed, p as u64))?;
        for (a, b) in y0.values.iter().zip(&yv.values) {
            if b - v > *a || a > b {
                violations += 1;
            }
        }
        let shifted: Vec<f64> = yv.values.iter().map(|x| x - v).collect();
        min_s.push(shifted.iter().cloned().fold(f64::INFINITY, f64::min));
        min_0.push(y0.values.iter().cloned().fold(f64::INFINITY, f64::min));
        end_s.push(*shifted.last().unwrap());
        end_0.push(*y0.values.last().unwrap());
    }
    let mut checks = Vec::new();
    for (name, fs, f0) in [("running_min", &min_s, &min_0), ("endpoint", &end_s, &end_0)] {
        let mut sorted = f0.clone();
        sorted.sort_by(f64::total_cmp);
        for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let c = sorted[((sorted.len() - 1) as f64 * q) as usize];
            let diffs: Vec<f64> =
                fs.iter().zip(f0.iter()).map(|(a, b)| ((*a > c) as u8 as f64) - ((*b > c) as u8 as f64)).collect();
            let p_shifted = fs.iter().filter(|&&x| x > c).count() as f64 / n_paths as f64;
            let p_zero = f0.iter().filter(|&&x| x > c).count() as f64 / n_paths as f64;
            let se = (variance(&diffs) / n_paths as f64).sqrt();
            checks.push(UpwardSetCheck {
                functional: name.to_string(),
                threshold: c,
                p_shifted,
                p_zero,
                se,
                holds: p_shifted <= p_zero + 3.0 * se,
            });
        }
    }
    let exact: Vec<f64> = (0..n_paths)
        .map(|p| {
            let path = sample_bessel3(v, &[horizon], rng::derive_seed(seed ^ 0x5eed, p as u64)).unwrap();
            path.values[0]
        })
        .collect();
    let coupled_end: Vec<f64> = end_s.iter().map(|x| x + v).collect();
    Ok(DominationReport {
        v,
        horizon,
        grid_step,
        n_paths,
        violations,
        checks,
        shifted_end_mean: mean(&end_s),
        shifted_end_se: (variance(&end_s) / n_paths as f64).sqrt(),
        law_p_value: ks_two_sample(&coupled_end, &exact).p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeLimitRow {
    pub length: f64,
    pub accepted: usize,
    pub proposals: u64,
    /// KS p-values at `s = b/2` and `s = b`.
    pub p_half: f64,
    pub p_full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeLimitReport {
    pub v: f64,
    pub b: f64,
    pub endpoint: f64,
    pub rows: Vec<BridgeLimitRow>,
    pub passed: bool,
}

/// Compares `(W_{b/2}, W_b)` of bridges conditioned to stay above `−v` with
/// `(Y_{b/2} − v, Y_b − v)` for `Y` a Bessel-3 process from `v`, for each
/// bridge length.
#[allow(clippy::too_many_arguments)]
pub fn bridge_to_bessel_check(
    v: f64,
    b: f64,
    endpoint: f64,
    lengths: &[f64],
    n_paths: usize,
    grid_step: f64,
    seed: u64,
    budget: u64,
) -> Result<BridgeLimitReport> {
    if lengths.iter().any(|&t| t <= b) || lengths.is_empty() {
        return Err(Error::invalid("every bridge length must exceed b"));
    }
    let reference: Vec<PathSample> = (0..n_paths)
        .map(|p| sample_bessel3(v, &[b / 2.0, b], rng::derive_seed(seed, p as u64)))
        .collect::<Result<_>>()?;
    let ref_half: Vec<f64> = reference.iter().map(|p| p.values[0] - v).collect();
    let ref_full: Vec<f64> = reference.iter().map(|p| p.values[1] - v).collect();
    let mut rows = Vec::new();
    for (i, &length) in lengths.iter().enumerate() {
        let grid = uniform_grid(length, grid_step);
        let batch = sample_bridges_above(v, endpoint, &grid, n_paths, rng::derive_seed(seed ^ 0xb41d, i as u64), budget)?;
        let at = |s: f64| -> Result<Vec<f64>> {
            batch
                .paths
                .iter()
                .map(|p| p.at(s).ok_or_else(|| Error::invalid(format!("time {s} is not a grid point"))))
                .collect()
        };
        rows.push(BridgeLimitRow {
            length,
            accepted: batch.paths.len(),
            proposals: batch.proposals,
            p_half: ks_two_sample(&at(b / 2.0)?, &ref_half).p_value,
            p_full: ks_two_sample(&at(b)?, &ref_full).p_value,
        });
    }
    let last = rows.last().unwrap();
    let passed = last.p_half > 0.01 && last.p_full > 0.01;
    Ok(BridgeLimitReport { v, b, endpoint, rows, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = uniform_grid(1.0, 0.1);
        assert_eq!(g.len(), 11);
        assert_eq!(*g.last().unwrap(), 1.0);
        let r = refined_grid(10.0, 13.05, 0.01, 1.0, 0.1);
        assert_eq!(r[0], 10.0);
        assert!((r[100] - 11.0).abs() < 1e-12);
        assert_eq!(*r.last().unwrap(), 13.05);
        assert!(r.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.1 + 1e-12));
    }

    #[test]
    fn grid_validation() {
        assert_eq!(sample_brownian(&[], 0).unwrap_err(), Error::EmptyGrid);
        assert!(sample_brownian(&[0.0, 0.5, 0.5], 0).is_err());
        assert!(sample_bessel3(-1.0, &[1.0], 0).is_err());
    }
}
