//! The spine random walk `S_k` of the concentric decomposition, its step
//! variances and the control variables `Ξ_k`, `K(η, ℓ)`.
//!
//! `S_k` is the harmonic average at the root of the field on `∂Δ^k`, i.e. the
//! conditional mean of `h(x₀)` given the field off `Δ^k`. `S_0 = 0` because the
//! field vanishes on `∂D_N`, and `S_n = h(x₀)`.

use serde::{Deserialize, Serialize};

use crate::chaos::{alpha, annulus_mass, centering, CriticalMeasure};
use crate::error::{Error, Result};
use crate::gff::{FieldLaw, FieldSample, GreenOperator, Spectral, SpectralSampler};
use crate::lattice::{ConcentricFrame, Site, SiteSet};
use crate::linalg;

/// `S_0, …, S_n` by solving the Dirichlet problem on every box `Δ^k`.
pub fn spine_walk(field: &FieldSample, frame: &ConcentricFrame) -> Result<Vec<f64>> {
    let n = frame.depth();
    let root = frame.root();
    let mut s = vec![0.0; n as usize + 1];
    for k in 1..n {
        let sites = frame.inner_box(k);
        let target = sites.index_of(root).expect("root lies in every box");
        s[k as usize] = linalg::harmonic_extension_at(&sites, target, |y| field.at(y))?;
    }
    s[n as usize] = field.at(root);
    Ok(s)
}

/// Green function of the box `Δ^k` at its centre, `G^{Δ^k}(x₀, x₀)`.
pub fn box_green_at_root(frame: &ConcentricFrame, k: u32) -> f64 {
    let r = frame.half_width(k) as usize;
    let side = 2 * r + 1;
    Spectral::new(side, side).entry((r, r), (r, r))
}

/// Harmonic measure of `∂Δ^k` seen from the root, for `1 ≤ k < n`.
///
/// The walk leaves `Δ^k` through `y` after a last visit to a neighbour `z`, so
/// `H(x₀, y) = ¼ Σ_{z ∈ Δ^k, z ~ y} G^{Δ^k}(x₀, z)`.
pub fn harmonic_measure(frame: &ConcentricFrame, k: u32) -> Vec<(Site, f64)> {
    let r = frame.half_width(k);
    let side = (2 * r + 1) as usize;
    let spectral = Spectral::new(side, side);
    let mut col = vec![0.0; side * side];
    col[r as usize * side + r as usize] = 1.0;
    spectral.apply_green(&mut col);
    let (cx, cy) = frame.root();
    let g = |x: i64, y: i64| col[(y - cy + r) as usize * side + (x - cx + r) as usize];
    let mut out = Vec::with_capacity(4 * side);
    for i in -r..=r {
        out.push(((cx + i, cy - r - 1), 0.25 * g(cx + i, cy - r)));
        out.push(((cx + i, cy + r + 1), 0.25 * g(cx + i, cy + r)));
        out.push(((cx - r - 1, cy + i), 0.25 * g(cx - r, cy + i)));
        out.push(((cx + r + 1, cy + i), 0.25 * g(cx + r, cy + i)));
    }
    out
}

/// Precomputed harmonic measures, so that each `S_k` is one short dot product.
pub struct SpineOperator {
    depth: u32,
    root_index: usize,
    // per k = 1..n-1: (domain index, weight); boundary points off the domain carry h = 0
    weights: Vec<Vec<(usize, f64)>>,
}

impl SpineOperator {
    pub fn new(frame: &ConcentricFrame, field_sites: &SiteSet) -> Result<Self> {
        let root_index = field_sites.index_of(frame.root()).ok_or(Error::RootTooClose { root: frame.root() })?;
        let weights = (1..frame.depth())
            .map(|k| {
                harmonic_measure(frame, k)
                    .into_iter()
                    .filter_map(|(y, w)| field_sites.index_of(y).map(|i| (i, w)))
                    .collect()
            })
            .collect();
        Ok(SpineOperator { depth: frame.depth(), root_index, weights })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.depth as usize + 1];
        for (k, w) in self.weights.iter().enumerate() {
            s[k + 1] = w.iter().map(|&(i, c)| c * values[i]).sum();
        }
        s[self.depth as usize] = values[self.root_index];
        s
    }

    /// Rows `v_k` with `S_k = ⟨v_k, z⟩` when the field is `SpectralSampler`'s
    /// coloring of the white noise `z`; index 0 is the zero row.
    pub fn noise_functionals(&self, sampler: &SpectralSampler) -> Vec<Vec<f64>> {
        let len = sampler.domain().len();
        let mut rows = vec![vec![0.0; len]];
        let unit = |entries: &[(usize, f64)]| {
            let mut w = vec![0.0; len];
            for &(i, c) in entries {
                w[i] += c;
            }
            sampler.spectral().color_adjoint(&mut w);
            w
        };
        for w in &self.weights {
            rows.push(unit(w));
        }
        rows.push(unit(&[(self.root_index, 1.0)]));
        rows
    }
}

/// `t_k = Var(α S_k) = α² (G^{D_N}(x₀,x₀) − G^{Δ^k}(x₀,x₀))` for `1 ≤ k < n`,
/// with `t_0 = 0` and `t_n = α² G^{D_N}(x₀,x₀)` since `S_n = h(x₀)`.
pub fn step_variances(green: &GreenOperator, frame: &ConcentricFrame) -> Result<Vec<f64>> {
    let a2 = alpha() * alpha();
    let n = frame.depth();
    let g_root = green.entry_at(frame.root(), frame.root())?;
    let mut t = vec![0.0; n as usize + 1];
    for k in 1..n {
        t[k as usize] = a2 * (g_root - box_green_at_root(frame, k));
    }
    t[n as usize] = a2 * g_root;
    Ok(t)
}

/// `b_k = m_N − m_{N e^{−k}}`.
pub fn drift(scale: u32, k: u32) -> f64 {
    let n = scale as f64;
    centering(n) - centering(n * (-(k as f64)).exp())
}

/// `Ξ_k = log Z_N(A_k) − α[S_k − m_N + m_{N e^{−k}}]`.
pub fn extract_xi(measure: &CriticalMeasure, s: &[f64], frame: &ConcentricFrame, k: u32) -> Result<f64> {
    if k >= 1 && k <= frame.depth() && frame.annulus_size(k) == 0 {
        return Err(Error::EmptyAnnulus { k: k as usize });
    }
    let mass = annulus_mass(measure, frame, k)?;
    let n = frame.scale() as f64;
    let predicted = alpha() * (s[k as usize] - centering(n) + centering(n * (-(k as f64)).exp()));
    Ok(mass.ln() - predicted)
}

/// `K(η, ℓ)`: the smallest `K ∈ {0, …, ℓ}` with `|Ξ_k| ≤ k^η` for every
/// `k ∈ {K, …, ℓ ∧ n}`, else `min(ℓ, ⌊n/2⌋) + 1`.
///
/// `xi[k]` holds `Ξ_k` (index 0 is unused: `Ξ` starts at `k = 1`). A missing
/// value counts as a violation.
pub fn control_variable(xi: &[Option<f64>], eta: f64, ell: u32, n: u32) -> u32 {
    let top = ell.min(n);
    let ok = |k: u32| -> bool {
        if k == 0 {
            return true;
        }
        match xi.get(k as usize).copied().flatten() {
            Some(x) => x.abs() <= (k as f64).powf(eta),
            None => false,
        }
    };
    // scanning down from the top finds the last violation
    let mut k = top;
    while k >= 1 && ok(k) {
        k -= 1;
    }
    let candidate = if k == 0 && ok(0) { 0 } else { k + 1 };
    if candidate <= ell {
        candidate
    } else {
        ell.min(n / 2) + 1
    }
}

/// All spine and control quantities of one rooted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentricStats {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub b: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub s_tilde: Vec<f64>,
    /// `xi[k]` for `k = 0..=n`; `xi[0]` is always `None`.
    pub xi: Vec<Option<f64>>,
    pub k_control: u32,
}

impl ConcentricStats {
    pub fn compute(
        measure: &CriticalMeasure,
        s: Vec<f64>,
        t: &[f64],
        frame: &ConcentricFrame,
        eta: f64,
        ell: u32,
    ) -> Result<Self> {
        let n = frame.depth();
        let a = alpha();
        let m_n = centering(frame.scale() as f64);
        let tn = t[n as usize];
        let b: Vec<f64> = (0..=n).map(|k| drift(frame.scale(), k)).collect();
        let s_hat = (0..=n as usize).map(|k| -a * s[k] + a * (t[k] / tn) * m_n).collect();
        let s_tilde = (0..=n as usize).map(|k| -a * s[k] + a * b[k]).collect();
        let mut xi = vec![None];
        for k in 1..=n {
            xi.push(match extract_xi(measure, &s, frame, k) {
                Ok(v) => Some(v),
                Err(Error::EmptyAnnulus { .. }) => None,
                Err(e) => return Err(e),
            });
        }
        let k_control = control_variable(&xi, eta, ell, n);
        Ok(ConcentricStats { s, t: t.to_vec(), b, s_hat, s_tilde, xi, k_control })
    }

    /// CSV rows `k,S,S_hat,S_tilde,Xi`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("k,S,S_hat,S_tilde,Xi\n");
        for k in 0..self.s.len() {
            let xi = self.xi[k].map_or(String::new(), |v| format!("{v:e}"));
            let _ = writeln!(out, "{k},{:e},{:e},{:e},{xi}", self.s[k], self.s_hat[k], self.s_tilde[k]);
        }
        out
    }
}
