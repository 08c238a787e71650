//! Gauge functions for Hausdorff measures.
//!
//! A gauge is specified through a decreasing profile `ψ`. From it we derive
//! `γ(t) = λ √(1+t) ψ(t)` and `φ(r) = ∫_{log(1/r)}^∞ e^{−γ(t)} dt`, and the
//! Motoo integral `I_ψ = ∫_1^∞ ψ(t)/t dt` decides which side of the
//! dichotomy the gauge falls on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative accuracy targeted by [`eval_phi`].
pub const PHI_TOLERANCE: f64 = 1e-6;
/// Truncation points beyond this are treated as non-convergent.
pub const PHI_TRUNCATION_CAP: f64 = 1e9;
/// Upper end of the monotonicity validation grid.
pub const VALIDATION_HORIZON: f64 = 1e6;
pub const VALIDATION_POINTS: usize = 1024;

/// Profile `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Psi {
    /// `ψ(t) = c [log(1+t)]^{−θ}`.
    Parametric { theta: f64, c: f64 },
    /// Knots `(t, ψ(t))` with `t > 0` strictly increasing. Interpolation is
    /// linear in log-log coordinates, constant before the first knot and a
    /// power law continuing the last segment after the final knot.
    Tabulated { knots: Vec<(f64, f64)> },
}

impl Psi {
    /// `ψ(e^u)`, computed without forming `e^u` so that huge `t` are safe.
    fn at_log(&self, u: f64) -> f64 {
        match self {
            Psi::Parametric { theta, c } => {
                // log(1 + e^u)
                let l = if u > 30.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
                c * l.powf(-theta)
            }
            Psi::Tabulated { knots } => {
                let (lt0, lp0) = (knots[0].0.ln(), knots[0].1.ln());
                if knots.len() == 1 || u <= lt0 {
                    return lp0.exp();
                }
                let i = knots.partition_point(|k| k.0.ln() <= u);
                let (a, b) = if i >= knots.len() { (knots.len() - 2, knots.len() - 1) } else { (i - 1, i) };
                let (la, pa) = (knots[a].0.ln(), knots[a].1.ln());
                let (lb, pb) = (knots[b].0.ln(), knots[b].1.ln());
                (pa + (pb - pa) * (u - la) / (lb - la)).exp()
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Psi::Parametric { theta, c } => c * t.ln_1p().powf(-theta),
            Psi::Tabulated { .. } => self.at_log(t.ln()),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Psi::Parametric { theta, c } => {
                if !(theta.is_finite() && *theta > 0.0 && c.is_finite() && *c > 0.0) {
                    return Err(Error::InvalidGauge(format!("need θ > 0 and c > 0, got θ={theta}, c={c}")));
                }
            }
            Psi::Tabulated { knots } => {
                if knots.is_empty() {
                    return Err(Error::InvalidGauge("empty knot table".into()));
                }
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::InvalidGauge("knot abscissae must increase strictly".into()));
                    }
                }
                if knots.iter().any(|&(t, p)| !(t > 0.0 && t.is_finite() && p > 0.0 && p.is_finite())) {
                    return Err(Error::InvalidGauge("knots must be positive and finite".into()));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of the Motoo integral test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotooClass {
    Divergent,
    Convergent,
    Inconclusive,
}

/// `(ψ, γ, φ)` together with the validated monotonicity threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeTriple {
    psi: Psi,
    gamma_scale: f64,
    t_min_monotone: f64,
    validated: bool,
    forced: bool,
}

impl GaugeTriple {
    /// An unvalidated gauge. [`eval_phi`] refuses it until [`validate`](Self::validate) is called.
    pub fn new(psi: Psi, gamma_scale: f64) -> Self {
        GaugeTriple { psi, gamma_scale, t_min_monotone: 0.0, validated: false, forced: false }
    }

    pub fn parametric(theta: f64, c: f64) -> Result<Self> {
        GaugeTriple::new(Psi::Parametric { theta, c }, 1.0).validate(false)
    }

    pub fn tabulated(knots: Vec<(f64, f64)>, force: bool) -> Result<Self> {
        GaugeTriple::new(Psi::Tabulated { knots }, 1.0).validate(force)
    }

    pub fn with_gamma_scale(mut self, gamma_scale: f64) -> Result<Self> {
        self.gamma_scale = gamma_scale;
        let force = self.forced;
        self.validate(force)
    }

    pub fn psi(&self) -> &Psi {
        &self.psi
    }

    pub fn gamma_scale(&self) -> f64 {
        self.gamma_scale
    }

    pub fn t_min_monotone(&self) -> f64 {
        self.t_min_monotone
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    /// Checks that `ψ` is nonincreasing and `γ` nondecreasing past the
    /// monotonicity threshold, and that `γ` grows along the validation grid.
    ///
    /// The threshold is `e^{2θ} − 1` for the parametric family, where
    /// `d/du log(e^{u/2} u^{−θ}) = 1/2 − θ/u` changes sign. For tables it is the
    /// first grid point after which `γ` never decreases. With `force`, a `γ`
    /// that fails to grow is accepted; such a gauge can still be classified,
    /// but [`eval_phi`] rejects it if `γ` is not monotone.
    pub fn validate(mut self, force: bool) -> Result<Self> {
        self.psi.check()?;
        if !(self.gamma_scale.is_finite() && self.gamma_scale > 0.0) {
            return Err(Error::InvalidGauge(format!("gamma_scale must be positive, got {}", self.gamma_scale)));
        }
        self.validated = false;
        self.forced = force;
        let raw = |t: f64| self.gamma_scale * (1.0 + t).sqrt() * self.psi.eval(t);
        let (t_min, grid) = match &self.psi {
            Psi::Parametric { theta, .. } => {
                let t_min = (2.0 * theta).exp() - 1.0;
                (t_min, log_grid(t_min.max(1e-3), VALIDATION_HORIZON.max(100.0 * t_min), VALIDATION_POINTS))
            }
            Psi::Tabulated { knots } => {
                let hi = VALIDATION_HORIZON.max(knots[knots.len() - 1].0 * 100.0);
                let grid = log_grid(knots[0].0, hi, VALIDATION_POINTS);
                let mut start = grid.len() - 1;
                while start > 0 && raw(grid[start - 1]) <= raw(grid[start]) * (1.0 + 1e-12) {
                    start -= 1;
                }
                (grid[start], grid[start..].to_vec())
            }
        };
        for w in grid.windows(2) {
            if self.psi.eval(w[1]) > self.psi.eval(w[0]) * (1.0 + 1e-12) {
                return Err(Error::InvalidGauge(format!("ψ increases between t={} and t={}", w[0], w[1])));
            }
        }
        let first = raw(grid[0]);
        let last = raw(grid[grid.len() - 1]);
        let grows = grid.len() > 1 && last > first * (1.0 + 1e-9);
        if !grows && !force {
            return Err(Error::InvalidGauge("γ(t) does not tend to infinity along the validation grid".into()));
        }
        self.t_min_monotone = t_min;
        self.validated = grows;
        if !grows {
            // accepted under force; φ stays unavailable
            self.t_min_monotone = f64::INFINITY;
        }
        Ok(self)
    }

    pub fn gamma(&self, t: f64) -> Result<f64> {
        eval_gamma(self, t)
    }

    pub fn phi(&self, r: f64) -> Result<f64> {
        eval_phi(self, r)
    }

    pub fn classify(&self) -> MotooClass {
        classify_i_psi(self)
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `γ(t) = λ √(1+t) ψ(t)`.
pub fn eval_gamma(g: &GaugeTriple, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::DomainError(format!("γ is defined for t ≥ 0, got {t}")));
    }
    Ok(g.gamma_scale * (1.0 + t).sqrt() * g.psi.eval(t))
}

/// `φ(r) = ∫_{log(1/r)}^∞ e^{−γ(t)} dt` for a validated gauge.
pub fn eval_phi(g: &GaugeTriple, r: f64) -> Result<f64> {
    if !g.validated {
        return Err(Error::GaugeNotValidated);
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::DomainError(format!("φ is evaluated on (0,1), got r={r}")));
    }
    let gamma = |t: f64| g.gamma_scale * (1.0 + t).sqrt() * g.psi.eval(t);
    tail_integral(gamma, (1.0 / r).ln(), g.t_min_monotone)
}

/// `∫_{log(1/r)}^∞ e^{−γ(t)} dt` for an arbitrary `γ` that is nondecreasing on
/// `[0, ∞)`.
pub fn phi_from_gamma(gamma: impl Fn(f64) -> f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::DomainError(format!("φ is evaluated on (0,1), got r={r}")));
    }
    tail_integral(gamma, (1.0 / r).ln(), 0.0)
}

/// Integrates `e^{−γ}` over `[a, ∞)` on the dyadic panels `[2^j, 2^{j+1}]`,
/// doubling the truncation point until the remainder bound is negligible.
///
/// The panels do not depend on `a`, so two evaluations differ only through the
/// leading partial panel; this keeps `φ` strictly monotone in floating point.
fn tail_integral(gamma: impl Fn(f64) -> f64, a: f64, t_monotone: f64) -> Result<f64> {
    let f = |t: f64| (-gamma(t)).exp();
    let mut hi = 2f64.powi(a.log2().floor() as i32 + 1);
    let mut total: f64 = adaptive(&f, a, hi, 1e-13 * gauss8(&f, a, hi).abs(), 40);
    loop {
        let lo = hi;
        hi *= 2.0;
        total += adaptive(&f, lo, hi, 1e-13 * (total + gauss8(&f, lo, hi).abs()), 40);
        if hi >= t_monotone {
            let bound = remainder_bound(&gamma, hi);
            if bound <= 1e-15 * total {
                return Ok(total);
            }
            if hi > PHI_TRUNCATION_CAP {
                if bound <= PHI_TOLERANCE * total {
                    return Ok(total);
                }
                return Err(Error::TailNotConvergent { horizon: hi });
            }
        } else if hi > PHI_TRUNCATION_CAP {
            return Err(Error::TailNotConvergent { horizon: hi });
        }
    }
}

/// `Σ_j 2^j T e^{−γ(2^j T)}`, which dominates `∫_T^∞ e^{−γ}` when `γ` is
/// nondecreasing past `T`.
fn remainder_bound(gamma: impl Fn(f64) -> f64, t: f64) -> f64 {
    let mut sum = 0.0;
    let mut s = t;
    for _ in 0..200 {
        let term = s * (-gamma(s)).exp();
        sum += term;
        if term <= 1e-3 * sum || !term.is_finite() {
            break;
        }
        s *= 2.0;
    }
    sum
}

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss8(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL_NODES.iter().zip(GL_WEIGHTS).map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h
}

/// Recursive 8-point Gauss–Legendre, bisecting until halves agree with the whole.
fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, depth: u32) -> f64 {
    let whole = gauss8(f, a, b);
    let m = 0.5 * (a + b);
    let (l, r) = (gauss8(f, a, m), gauss8(f, m, b));
    let err = (l + r - whole).abs();
    if depth == 0 || err <= abs_tol.max(1e-12 * (l + r).abs()) {
        return l + r;
    }
    adaptive(f, a, m, 0.5 * abs_tol, depth - 1) + adaptive(f, m, b, 0.5 * abs_tol, depth - 1)
}

/// Motoo classification of `I_ψ`.
///
/// The parametric family is classified exactly: divergent iff `θ ≤ 1`.
/// Tables are integrated in `u = log t` on doubling horizons `U = 1, 2, 4, …`
/// up to `2^30`; stabilized increments mean convergence, increments that stop
/// shrinking mean at least logarithmic growth, anything else is inconclusive.
pub fn classify_i_psi(g: &GaugeTriple) -> MotooClass {
    match g.psi {
        Psi::Parametric { theta, .. } => {
            if theta <= 1.0 {
                MotooClass::Divergent
            } else {
                MotooClass::Convergent
            }
        }
        Psi::Tabulated { .. } => {
            let f = |u: f64| g.psi.at_log(u);
            let mut total = adaptive(&f, 0.0, 1.0, 1e-12, 30);
            let mut increments = Vec::new();
            let mut u = 1.0;
            while u < (1u64 << 30) as f64 {
                let inc = adaptive(&f, u, 2.0 * u, 1e-12 * total, 30);
                total += inc;
                increments.push(inc);
                let k = increments.len();
                if k >= 2 && increments[k - 1] <= 1e-8 * total && increments[k - 2] <= 1e-8 * total {
                    return MotooClass::Convergent;
                }
                if k >= 4 && (k - 3..k).all(|i| increments[i] >= 0.999 * increments[i - 1]) {
                    return MotooClass::Divergent;
                }
                u *= 2.0;
            }
            MotooClass::Inconclusive
        }
    }
}

/// Anything that can play the role of `φ` in a Hausdorff sum.
pub trait GaugeFunction {
    fn phi(&self, r: f64) -> Result<f64>;
}

impl GaugeFunction for GaugeTriple {
    fn phi(&self, r: f64) -> Result<f64> {
        eval_phi(self, r)
    }
}

/// `φ_s(r) = r^s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerGauge {
    pub s: f64,
}

impl GaugeFunction for PowerGauge {
    fn phi(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::DomainError(format!("negative radius {r}")));
        }
        Ok(r.powf(self.s))
    }
}

/// `λ φ` for a positive constant `λ`.
#[derive(Debug, Clone)]
pub struct ScaledGauge<G> {
    pub inner: G,
    pub factor: f64,
}

impl<G: GaugeFunction> GaugeFunction for ScaledGauge<G> {
    fn phi(&self, r: f64) -> Result<f64> {
        Ok(self.factor * self.inner.phi(r)?)
    }
}

impl<G: GaugeFunction + ?Sized> GaugeFunction for &G {
    fn phi(&self, r: f64) -> Result<f64> {
        (**self).phi(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotonicity_threshold_of_the_parametric_family() {
        let g = GaugeTriple::parametric(2.0, 1.0).unwrap();
        assert!((g.t_min_monotone() - (4.0f64.exp() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn log_domain_psi_matches_direct_evaluation() {
        let p = Psi::Parametric { theta: 1.5, c: 2.0 };
        for t in [0.5f64, 3.0, 1e3, 1e12] {
            assert!((p.at_log(t.ln()) - p.eval(t)).abs() < 1e-12 * p.eval(t));
        }
    }

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let v = gauss8(&|x: f64| x.powi(15) + 3.0 * x * x, 0.0, 2.0);
        assert!((v - (2f64.powi(16) / 16.0 + 8.0)).abs() < 1e-9);
    }
}
