//! Acceptance suite at the full stated sizes. Prints one PASS/FAIL line per
//! criterion and a tally; failures are reported, not asserted.

use std::fs;
use std::path::Path;
use std::time::Instant;

use clqg_core::chaos::G;
use clqg_core::hausdorff::DensityClass;
use clqg_harness::config::{GaugeSpec, SpineMode};
use clqg_harness::experiments::{bessel, decay, extremal, field, green, hausdorff, spine, tail};
use clqg_harness::{run_and_write, Experiment, ExperimentConfig};

type Check = Result<(bool, String), String>;

fn cfg(e: Experiment, seed: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(e);
    c.seed = seed;
    c
}

fn c1() -> Check {
    let mut c = cfg(Experiment::GreenCheck, 1);
    c.walks = 100_000;
    c.entries = 20;
    c.box_side = 16;
    let s = green::run(&c).map_err(|e| e.to_string())?.summary;
    let ok = s.singleton == 1.0 && s.pair_error <= 1e-12 && s.walk_max_abs_z <= 3.0;
    Ok((ok, format!("singleton={} pair_error={:.1e} max|z|={:.2} over {} entries", s.singleton, s.pair_error, s.walk_max_abs_z, s.walk_entries.len())))
}

fn c2() -> Check {
    let mut c = cfg(Experiment::FieldStats, 2);
    c.n = 67;
    c.replicas = 10_000;
    c.check_sites = 10;
    let s = field::run(&c).map_err(|e| e.to_string())?.summary;
    let ok = s.diagonal_over_5pct == 0 && s.off_diagonal_max_abs_z <= 4.0 && s.ks_min_p > 0.01;
    Ok((
        ok,
        format!(
            "{} sites, diagonal max rel err {:.4} ({} over 5%, centre {:.4}), off-diagonal max|z|={:.2}, KS min p={:.3}",
            s.sites, s.max_relative_diagonal_error, s.diagonal_over_5pct, s.center_relative_error, s.off_diagonal_max_abs_z, s.ks_min_p
        ),
    ))
}

fn c3() -> Check {
    let mut c = cfg(Experiment::GreenCheck, 3);
    c.walks = 10;
    c.entries = 1;
    c.sizes = vec![64, 128, 256];
    let s = green::run(&c).map_err(|e| e.to_string())?.summary;
    let ok = s.max_relative_increment_error <= 0.10;
    Ok((ok, format!("increments {:?} vs g·log 2 = {:.4}, max rel err {:.4}", s.increments, G * 2f64.ln(), s.max_relative_increment_error)))
}

fn c4() -> Check {
    let mut c = cfg(Experiment::MaxTail, 4);
    c.n = 256;
    c.replicas = 10_000;
    let s = tail::run(&c).map_err(|e| e.to_string())?.summary;
    let ok = s.relative_error <= 0.15;
    Ok((ok, format!("slope {:.4} (raw {:.4}) vs {:.4}, rel err {:.3}, {} points", s.slope, s.raw_slope, s.target, s.relative_error, s.fit_points)))
}

fn c5() -> Check {
    let mut c = cfg(Experiment::NearExtremal, 5);
    c.n = 1024;
    c.replicas = 2000;
    let s = extremal::run(&c).map_err(|e| e.to_string())?.summary;
    let ok = (s.fraction_outside - 0.5).abs() <= 0.07;
    Ok((ok, format!("fraction outside [0,{:.4}] = {:.4} ± {:.4}, limit {:.4}", s.a, s.fraction_outside, s.se, s.limit)))
}

fn c6() -> Check {
    let mut c = cfg(Experiment::Spine, 6);
    c.n = 1024;
    c.replicas = 10_000;
    c.spine_mode = SpineMode::Projection;
    let s = spine::run(&c).map_err(|e| e.to_string())?.summary;
    let top = 5.min(s.depth as usize);
    let mc = s.mc_relative_error[1..=top].iter().cloned().fold(0.0, f64::max);
    let ok = s.t_minus_4k_max <= 3.0 && mc <= 0.05;
    Ok((ok, format!("depth {}, max|t_k−4k| = {:.3}, max MC rel err (k≤{top}) = {:.4}", s.depth, s.t_minus_4k_max, mc)))
}

fn c7() -> Check {
    let mut c = cfg(Experiment::Spine, 7);
    c.n = 2048;
    c.replicas = 500;
    c.spine_mode = SpineMode::Field;
    let s = spine::run(&c).map_err(|e| e.to_string())?.summary;
    let at = |k: usize| s.xi_exceed_fraction.get(k).copied().flatten();
    match (at(3), at(7)) {
        (Some(p3), Some(p7)) => Ok((p7 < p3, format!("depth {}, P(|Ξ_3|>3^0.2)={p3:.3}, P(|Ξ_7|>7^0.2)={p7:.3}", s.depth))),
        _ => Ok((false, format!("depth {} has no annulus 7", s.depth))),
    }
}

fn motoo(theta: f64) -> Result<clqg_harness::experiments::bessel::MotooSummary, String> {
    let mut c = cfg(Experiment::Motoo, 8);
    c.gauge = GaugeSpec::parametric(theta);
    c.horizons = vec![1e3, 1e5];
    c.t_start = 10.0;
    c.replicas = 1000;
    Ok(bessel::run_motoo(&c).map_err(|e| e.to_string())?.summary)
}

fn c8() -> Check {
    let hi = motoo(2.0)?;
    let lo = motoo(0.5)?;
    let ok = hi.change.abs() < 0.05 && lo.ratio < 0.5;
    Ok((
        ok,
        format!(
            "θ=2 fractions {:?} (Δ={:.4}); θ=0.5 fractions {:?} (ratio {:.3})",
            hi.report.fractions, hi.change, lo.report.fractions, lo.ratio
        ),
    ))
}

fn c9() -> Check {
    let mut c = cfg(Experiment::Domination, 9);
    c.v = 2.0;
    c.horizon = 10.0;
    c.grid_step = 0.01;
    c.replicas = 1000;
    let s = bessel::run_domination(&c).map_err(|e| e.to_string())?.summary;
    Ok((s.violations == 0, format!("{} violations over {} coupled paths", s.violations, s.n_paths)))
}

fn c10() -> Check {
    let mut c = cfg(Experiment::BridgeLimit, 10);
    c.v = 1.0;
    c.b = 1.0;
    c.lengths = vec![10.0, 100.0];
    c.grid_step = 0.001;
    c.replicas = 2000;
    let s = bessel::run_bridge_limit(&c).map_err(|e| e.to_string())?.summary;
    let last = s.rows.last().unwrap();
    let ok = last.accepted >= 2000 && last.p_half > 0.01 && last.p_full > 0.01;
    Ok((ok, format!("T={}: {} accepted, KS p at b/2 = {:.3}, at b = {:.3}", last.length, last.accepted, last.p_half, last.p_full)))
}

fn c11() -> Check {
    let mut c = cfg(Experiment::BallDecay, 11);
    c.n = 1024;
    c.replicas = 200;
    c.k_min = 3;
    let s = decay::run_ball_decay(&c).map_err(|e| e.to_string())?.summary;
    let ok = (0.35..=0.65).contains(&s.slope);
    Ok((ok, format!("slope {:.4} over k∈[{}, {}], medians {:?}", s.slope, s.fit_k_min, s.fit_k_max, s.median_neg_log_mass)))
}

fn c12() -> Check {
    let mut c = cfg(Experiment::Dichotomy, 12);
    c.n = 1024;
    c.replicas = 200;
    c.k_min = 3;
    c.gauge = GaugeSpec::parametric(0.5);
    c.alt_gauge = GaugeSpec::parametric(2.0);
    let s = decay::run_dichotomy(&c).map_err(|e| e.to_string())?.summary;
    let (lo, hi) = (&s.gauges[0], &s.gauges[1]);
    let ok = lo.spearman > 0.5 && hi.spearman < -0.5;
    Ok((
        ok,
        format!(
            "k={:?}: θ=0.5 ρ={:.3} medians {:?}; θ=2 ρ={:.3} medians {:?}",
            s.k, lo.spearman, lo.median_ratio, hi.spearman, hi.median_ratio
        ),
    ))
}

fn c13() -> Check {
    let mut c = cfg(Experiment::HausdorffFixture, 13);
    c.n = 512;
    let s = hausdorff::run(&c).map_err(|e| e.to_string())?.summary;
    let ok = (s.segment - 1.0).abs() <= 0.1
        && (s.square - 2.0).abs() <= 0.1
        && (s.cantor - 1.262).abs() <= 0.1
        && s.lebesgue_r3 == DensityClass::MeasureInfinite
        && s.lebesgue_r2 != DensityClass::MeasureInfinite;
    Ok((
        ok,
        format!(
            "segment {:.3}, square {:.3}, cantor {:.3}; r² {:?}, r³ {:?}",
            s.segment, s.square, s.cantor, s.lebesgue_r2, s.lebesgue_r3
        ),
    ))
}

fn quick(e: Experiment) -> ExperimentConfig {
    let mut c = cfg(e, 14);
    match e {
        Experiment::GreenCheck => {
            (c.walks, c.entries, c.box_side, c.sizes) = (500, 3, 6, vec![16, 32]);
        }
        Experiment::FieldStats => (c.n, c.replicas, c.check_sites) = (12, 200, 3),
        Experiment::MaxTail | Experiment::NearExtremal => (c.n, c.replicas) = (32, 50),
        Experiment::BallDecay | Experiment::Dichotomy => (c.n, c.k_max, c.replicas) = (256, Some(4), 5),
        Experiment::Spine => (c.n, c.replicas, c.spine_mode) = (64, 20, SpineMode::Field),
        Experiment::Motoo => (c.horizons, c.replicas) = (vec![20.0, 40.0], 30),
        Experiment::Domination => (c.horizon, c.grid_step, c.replicas) = (1.0, 0.05, 30),
        Experiment::BridgeLimit => (c.lengths, c.grid_step, c.replicas) = (vec![2.0, 4.0], 0.05, 30),
        Experiment::HausdorffFixture => (c.level_min, c.level_max, c.cantor_depth, c.n, c.points) = (2, 6, 4, 64, 10),
        Experiment::ConditionedBallot => (c.sizes, c.t_grid, c.replicas, c.u) = (vec![16, 32], vec![0.0, 0.5], 30, 3.0),
    }
    c.save_field = matches!(e, Experiment::MaxTail | Experiment::FieldStats | Experiment::Spine);
    c
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c14() -> Check {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut differing = Vec::new();
    for e in Experiment::ALL {
        let mut outs = Vec::new();
        for run in 0..2 {
            let mut c = quick(e);
            c.output_dir = root.path().join(format!("{e}-{run}"));
            run_and_write(&c).map_err(|err| format!("{e}: {err}"))?;
            outs.push(read_dir(&c.output_dir));
        }
        if outs[0] != outs[1] {
            differing.push(e.name());
        }
    }
    Ok((differing.is_empty(), format!("{} experiments rerun, differing: {:?}", Experiment::ALL.len(), differing)))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 14] = [
        ("green-function oracles", c1),
        ("sampler fidelity", c2),
        ("green log-increment", c3),
        ("max tail slope", c4),
        ("near-extremal statistic", c5),
        ("spine variances", c6),
        ("control-variable tightness", c7),
        ("motoo dichotomy", c8),
        ("bessel domination", c9),
        ("bridge-to-bessel", c10),
        ("root-log decay", c11),
        ("dichotomy trends", c12),
        ("hausdorff fixtures", c13),
        ("determinism", c14),
    ];
    let only: Option<usize> = std::env::var("CLQG_CRITERION").ok().and_then(|s| s.parse().ok());
    let mut passed = 0;
    let mut run = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        run += 1;
        let start = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        passed += ok as usize;
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name} [{:.1}s]: {detail}", i + 1, start.elapsed().as_secs_f64());
    }
    println!("acceptance: {passed}/{run} criteria passed");
}
