//! The critical chaos measure `Z_N^D = (1/log N) Σ_x e^{α(h_x − m_N)} δ_{x/N}`.

use std::f64::consts::{E, PI};
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gff::{FieldSample, Provenance};
use crate::lattice::{ConcentricFrame, LatticeDomain, Site};
use crate::rng;

/// `g = 2/π`.
pub const G: f64 = 2.0 / PI;

/// `α = 2/√g = √(2π)`.
pub fn alpha() -> f64 {
    2.0 / G.sqrt()
}

/// `m_N = 2√g log N − (3/4)√g log log(N ∨ e)`, for real `N > 0`.
pub fn centering(n: f64) -> f64 {
    let sg = G.sqrt();
    2.0 * sg * n.ln() - 0.75 * sg * n.max(E).ln().ln()
}

/// Neumaier-compensated sum.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

/// Mass of closed `ℓ∞` balls in scaled coordinates.
pub trait BallMeasure {
    /// `μ([c − r, c + r]²)` with `c` in continuum coordinates.
    fn ball_mass(&self, center: (f64, f64), r: f64) -> f64;
    fn total(&self) -> f64;
}

/// Nonnegative weights on the sites of a lattice domain, placed at `x/N`.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    domain: Arc<LatticeDomain>,
    weights: Vec<f64>,
    total: f64,
    cumulative: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(domain: Arc<LatticeDomain>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != domain.len() {
            return Err(Error::invalid(format!("{} weights for {} sites", weights.len(), domain.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::DegenerateMeasure);
        }
        let total = compensated_sum(weights.iter().copied());
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        Ok(AtomicMeasure { domain, weights, total, cumulative })
    }

    /// `1/N²` at every site: the lattice approximation of Lebesgue measure.
    pub fn lebesgue(domain: Arc<LatticeDomain>) -> Self {
        let n = domain.scale() as f64;
        let w = vec![1.0 / (n * n); domain.len()];
        AtomicMeasure::new(domain, w).expect("uniform weights are valid")
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Continuum position `x/N` of site `i`.
    pub fn position(&self, i: usize) -> (f64, f64) {
        let n = self.domain.scale() as f64;
        let (x, y) = self.domain.sites().site(i);
        (x as f64 / n, y as f64 / n)
    }

    /// Sum of weights over the sites whose indices are given.
    pub fn mass_of(&self, indices: impl IntoIterator<Item = usize>) -> f64 {
        compensated_sum(indices.into_iter().map(|i| self.weights[i]))
    }

    /// Inverse of the cumulative distribution: the index drawn for a uniform
    /// `u ∈ [0, 1)`. Site `i` owns `[c_{i-1}, c_i)/total`, so zero-weight sites
    /// are never returned.
    pub fn index_for(&self, u: f64) -> Result<usize> {
        let last = *self.cumulative.last().ok_or(Error::DegenerateMeasure)?;
        if !(last > 0.0 && last.is_finite()) {
            return Err(Error::DegenerateMeasure);
        }
        let i = self.cumulative.partition_point(|&c| c <= u * last);
        Ok(i.min(self.weights.len() - 1))
    }

    pub fn draw_index(&self, rng: &mut rng::Rng) -> Result<usize> {
        self.index_for(rng.random::<f64>())
    }
}

impl BallMeasure for AtomicMeasure {
    fn ball_mass(&self, center: (f64, f64), r: f64) -> f64 {
        let n = self.domain.scale() as f64;
        let (cx, cy) = (center.0 * n, center.1 * n);
        let rr = r * n;
        let (x0, y0, w, h) = self.domain.sites().bbox();
        let xa = ((cx - rr).ceil() as i64).max(x0);
        let xb = ((cx + rr).floor() as i64).min(x0 + w as i64 - 1);
        let ya = ((cy - rr).ceil() as i64).max(y0);
        let yb = ((cy + rr).floor() as i64).min(y0 + h as i64 - 1);
        let mut terms = Vec::new();
        for y in ya..=yb {
            for x in xa..=xb {
                // closed ball, tested in scaled coordinates
                let inside = (x as f64 / n - center.0).abs() <= r && (y as f64 / n - center.1).abs() <= r;
                if inside {
                    if let Some(i) = self.domain.index_of((x, y)) {
                        terms.push(self.weights[i]);
                    }
                }
            }
        }
        compensated_sum(terms)
    }

    fn total(&self) -> f64 {
        self.total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureMeta {
    pub alpha: f64,
    pub g: f64,
    pub m_n: f64,
    pub scale: u32,
}

/// `Z_N^D` built from one field sample.
#[derive(Debug, Clone)]
pub struct CriticalMeasure {
    atoms: AtomicMeasure,
    meta: MeasureMeta,
    provenance: Provenance,
}

pub fn build_measure(field: &FieldSample) -> Result<CriticalMeasure> {
    let scale = field.domain.scale();
    if scale < 3 {
        return Err(Error::invalid(format!("the chaos measure needs N ≥ 3, got {scale}")));
    }
    let n = scale as f64;
    let a = alpha();
    let m_n = centering(n);
    let log_n = n.ln();
    let weights = field.values.iter().map(|h| (a * (h - m_n)).exp() / log_n).collect();
    let atoms = AtomicMeasure::new(field.domain.clone(), weights)?;
    Ok(CriticalMeasure { atoms, meta: MeasureMeta { alpha: a, g: G, m_n, scale }, provenance: field.provenance })
}

impl CriticalMeasure {
    pub fn atoms(&self) -> &AtomicMeasure {
        &self.atoms
    }

    pub fn meta(&self) -> &MeasureMeta {
        &self.meta
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn weights(&self) -> &[f64] {
        self.atoms.weights()
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        self.atoms.domain()
    }
}

impl BallMeasure for CriticalMeasure {
    fn ball_mass(&self, center: (f64, f64), r: f64) -> f64 {
        self.atoms.ball_mass(center, r)
    }

    fn total(&self) -> f64 {
        self.atoms.total()
    }
}

/// `Z_N^D(Δ^k \ Δ^{k+1})` for `1 ≤ k ≤ n`.
pub fn annulus_mass(m: &CriticalMeasure, frame: &ConcentricFrame, k: u32) -> Result<f64> {
    if k < 1 || k > frame.depth() {
        return Err(Error::IndexRange { index: k as usize, lo: 1, hi: frame.depth() as usize });
    }
    Ok(m.atoms.mass_of(frame.annulus_indices(k)))
}

/// A point drawn from `Z_N^D / Z_N^D(D)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeBiasedDraw {
    pub index: usize,
    pub point: Site,
    pub field_ref: Provenance,
}

impl SizeBiasedDraw {
    /// Continuum location `X̂ = point/N`.
    pub fn position(&self, scale: u32) -> (f64, f64) {
        (self.point.0 as f64 / scale as f64, self.point.1 as f64 / scale as f64)
    }
}

pub fn draw_point(m: &CriticalMeasure, seed: u64) -> Result<SizeBiasedDraw> {
    let mut r = rng::seeded(seed);
    let index = m.atoms.draw_index(&mut r)?;
    Ok(SizeBiasedDraw { index, point: m.domain().sites().site(index), field_ref: m.provenance })
}

/// `(m_N − h(X̂)) / √(log N)`.
pub fn near_extremal_statistic(field: &FieldSample, draw: &SizeBiasedDraw) -> f64 {
    let n = field.domain.scale() as f64;
    (centering(n) - field.values[draw.index]) / n.ln().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_is_root_two_pi() {
        assert!((alpha() - (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!((alpha() - 2.506_628_274_6).abs() < 1e-10);
        assert!((alpha() * alpha() * G - 4.0).abs() < 1e-14);
    }

    #[test]
    fn centering_at_e_cubed() {
        let sg = (2.0 / PI).sqrt();
        let expect = 2.0 * sg * 3.0 - 0.75 * sg * 3f64.ln();
        assert!((centering(3f64.exp()) - expect).abs() < 1e-12);
        // below e the log log term is clamped to zero
        assert!((centering(2.0) - 2.0 * sg * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_beats_naive_summation() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}
