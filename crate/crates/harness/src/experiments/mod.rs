//! The experiment catalogue. Every experiment is a pure function of its
//! configuration, master seed included.

use std::sync::Arc;

use clqg_core::gff::{ExactSampler, FieldLaw, SpectralSampler};
use clqg_core::lattice::{discretize, kappa, LatticeDomain};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::output::Report;

pub mod ballot;
pub mod bessel;
pub mod decay;
pub mod extremal;
pub mod field;
pub mod green;
pub mod hausdorff;
pub mod spine;
pub mod tail;

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let e = cfg.experiment;
    Ok(match e {
        Experiment::GreenCheck => green::run(cfg)?.into_report(e),
        Experiment::FieldStats => field::run(cfg)?.into_report(e),
        Experiment::MaxTail => tail::run(cfg)?.into_report(e),
        Experiment::NearExtremal => extremal::run(cfg)?.into_report(e),
        Experiment::BallDecay => decay::run_ball_decay(cfg)?.into_report(e),
        Experiment::Dichotomy => decay::run_dichotomy(cfg)?.into_report(e),
        Experiment::Spine => spine::run(cfg)?.into_report(e),
        Experiment::Motoo => bessel::run_motoo(cfg)?.into_report(e),
        Experiment::Domination => bessel::run_domination(cfg)?.into_report(e),
        Experiment::BridgeLimit => bessel::run_bridge_limit(cfg)?.into_report(e),
        Experiment::HausdorffFixture => hausdorff::run(cfg)?.into_report(e),
        Experiment::ConditionedBallot => ballot::run(cfg)?.into_report(e),
    })
}

pub(crate) fn domain(cfg: &ExperimentConfig, n: u32) -> Result<Arc<LatticeDomain>> {
    Ok(Arc::new(discretize(&cfg.domain.shape(), n)?))
}

/// The sine-basis sampler on rectangles, band Cholesky elsewhere.
pub(crate) fn law(dom: &Arc<LatticeDomain>) -> Result<Box<dyn FieldLaw>> {
    Ok(match dom.rectangle_dims() {
        Some(_) => Box::new(SpectralSampler::new(dom.clone())?),
        None => Box::new(ExactSampler::new(dom.clone())?),
    })
}

/// `k_max(N) = ⌊log N⌋ − κ(δ) − 1`: the smallest ball `e^{-k}` still holds
/// about `e²` lattice sites.
pub fn k_max(n: u32, delta: f64) -> u32 {
    ((n as f64).ln().floor() as i64 - kappa(delta) as i64 - 1).max(0) as u32
}

pub(crate) fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::config(msg)
}
