use std::fs;

use clqg_harness::config::{GaugeSpec, SpineMode};
use clqg_harness::experiments::{self, ballot, decay, k_max};
use clqg_harness::{run_and_write, Experiment, ExperimentConfig};
use serde_json::Value;

/// Small, fast configurations of every experiment.
fn small(e: Experiment) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(e);
    c.seed = 11;
    match e {
        Experiment::GreenCheck => {
            c.walks = 2000;
            c.entries = 4;
            c.box_side = 6;
            c.sizes = vec![16, 32];
        }
        Experiment::FieldStats => {
            c.n = 12;
            c.replicas = 300;
            c.check_sites = 3;
        }
        Experiment::MaxTail | Experiment::NearExtremal => {
            c.n = 32;
            c.replicas = 60;
        }
        Experiment::BallDecay | Experiment::Dichotomy => {
            c.n = 256;
            c.k_max = Some(4);
            c.replicas = 6;
        }
        Experiment::Spine => {
            c.n = 64;
            c.replicas = 50;
        }
        Experiment::Motoo => {
            c.horizons = vec![20.0, 40.0];
            c.replicas = 50;
        }
        Experiment::Domination => {
            c.v = 2.0;
            c.horizon = 1.0;
            c.grid_step = 0.05;
            c.replicas = 50;
        }
        Experiment::BridgeLimit => {
            c.lengths = vec![2.0, 4.0];
            c.grid_step = 0.05;
            c.replicas = 40;
        }
        Experiment::HausdorffFixture => {
            c.level_min = 2;
            c.level_max = 6;
            c.cantor_depth = 4;
            c.n = 64;
            c.points = 10;
        }
        Experiment::ConditionedBallot => {
            c.sizes = vec![16, 32];
            c.t_grid = vec![0.0, 0.5];
            c.replicas = 40;
            c.u = 3.0;
        }
    }
    c
}

fn results(e: &ExperimentConfig) -> Value {
    experiments::run(e).unwrap().summary
}

#[test]
fn every_experiment_is_byte_identical_on_rerun() {
    let root = tempfile::tempdir().unwrap();
    for e in Experiment::ALL {
        let mut c = small(e);
        c.save_field = matches!(e, Experiment::MaxTail | Experiment::Spine);
        let mut files = Vec::new();
        for run in 0..2 {
            c.output_dir = root.path().join(format!("{e}-{run}"));
            run_and_write(&c).unwrap();
            let mut names: Vec<_> = fs::read_dir(&c.output_dir).unwrap().map(|d| d.unwrap().file_name()).collect();
            names.sort();
            files.push(names.iter().map(|n| (n.clone(), fs::read(c.output_dir.join(n)).unwrap())).collect::<Vec<_>>());
        }
        assert_eq!(files[0], files[1], "{e}");
        let names: Vec<_> = files[0].iter().map(|(n, _)| n.to_string_lossy().into_owned()).collect();
        assert!(names.contains(&"rows.csv".into()) && names.contains(&"summary.json".into()), "{e}: {names:?}");
        assert_eq!(names.contains(&"field.bin".into()), c.save_field, "{e}");
    }
}

#[test]
fn summaries_embed_hash_version_and_tolerances() {
    let c = small(Experiment::HausdorffFixture);
    let r = experiments::run(&c).unwrap();
    let doc: Value = serde_json::from_str(&r.summary_json(&c)).unwrap();
    assert_eq!(doc["config_hash"], c.hash());
    assert_eq!(doc["version"], clqg_harness::VERSION);
    assert_eq!(doc["experiment"], "hausdorff-fixture");
    assert!(doc["tolerances"]["gauge"]["phi_tolerance"].is_number());
    assert!(doc["tolerances"]["hausdorff"]["cell_budget"].is_number());
    assert!(doc["results"]["cantor"].is_number());
}

#[test]
fn different_seeds_give_different_rows() {
    let a = small(Experiment::NearExtremal);
    let mut b = a.clone();
    b.seed += 1;
    assert_ne!(experiments::run(&a).unwrap().table, experiments::run(&b).unwrap().table);
}

#[test]
fn field_file_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small(Experiment::MaxTail);
    c.save_field = true;
    c.output_dir = dir.path().to_path_buf();
    run_and_write(&c).unwrap();
    let g = clqg_core::gff::read_binary(fs::File::open(dir.path().join("field.bin")).unwrap()).unwrap();
    assert_eq!((g.scale, g.width, g.height), (32, 29, 29));
    assert!(g.values.iter().all(|v| v.is_finite()));
}

#[test]
fn green_check_small() {
    let s = results(&small(Experiment::GreenCheck));
    assert_eq!(s["singleton"], 1.0);
    assert!(s["pair_error"].as_f64().unwrap() < 1e-12);
    assert_eq!(s["walk_entries"].as_array().unwrap().len(), 4);
    assert_eq!(s["increments"].as_array().unwrap().len(), 1);
}

#[test]
fn max_tail_frequencies_are_nonincreasing() {
    let s = results(&small(Experiment::MaxTail));
    assert_eq!(s["nonincreasing"], true);
    assert_eq!(s["frequencies"].as_array().unwrap().len(), 5);
}

#[test]
fn ball_decay_schema() {
    let c = small(Experiment::BallDecay);
    let s = results(&c);
    assert_eq!(s["fit_k_min"], 3);
    assert_eq!(s["fit_k_max"], 4);
    assert!(s["slope"].is_number());
    let r = experiments::run(&c).unwrap();
    assert_eq!(r.table.rows.len(), c.replicas);
    assert_eq!(r.table.header[4], "M_2");
}

#[test]
fn k_max_follows_the_site_count_rule() {
    // ⌊log N⌋ − κ(δ) − 1 with κ(0.4) = 1
    assert_eq!(k_max(1024, 0.4), 4);
    assert_eq!(k_max(2048, 0.4), 5);
    assert_eq!(k_max(128, 0.1), 4 - 3 - 1);
}

#[test]
fn k_range_must_be_nonempty() {
    let mut c = small(Experiment::BallDecay);
    c.k_max = None;
    c.n = 128;
    assert!(matches!(experiments::run(&c), Err(clqg_harness::HarnessError::Config(_))));
}

#[test]
fn swapping_gauges_mirrors_the_dichotomy() {
    let c = small(Experiment::Dichotomy);
    let mut swapped = c.clone();
    std::mem::swap(&mut swapped.gauge, &mut swapped.alt_gauge);
    let a = decay::run_dichotomy(&c).unwrap().summary;
    let b = decay::run_dichotomy(&swapped).unwrap().summary;
    for (x, y) in a.gauges.iter().zip(b.gauges.iter().rev()) {
        assert_eq!(x.median_ratio, y.median_ratio);
        assert_eq!(x.trend, y.trend);
        assert_eq!(x.fraction_above_threshold, y.fraction_above_threshold);
    }
}

#[test]
fn dichotomy_ratios_scale_with_the_gauge() {
    let c = small(Experiment::Dichotomy);
    let mut scaled = c.clone();
    scaled.gauge = GaugeSpec { psi: clqg_harness::config::PsiSpec::Parametric { theta: 0.5, c: 1.0 }, gamma_scale: 1.0, force: false };
    scaled.alt_gauge = scaled.gauge.clone();
    let s = decay::run_dichotomy(&scaled).unwrap().summary;
    assert_eq!(s.gauges[0].median_ratio, s.gauges[1].median_ratio);
    assert_eq!(s.k, vec![3, 4]);
}

#[test]
fn spine_modes_agree_on_the_step_variances() {
    let mut c = small(Experiment::Spine);
    let p = results(&c);
    c.spine_mode = SpineMode::Field;
    c.replicas = 10;
    let f = results(&c);
    assert_eq!(p["t"], f["t"]);
    assert!(p["xi_exceed_fraction"].as_array().unwrap().iter().all(Value::is_null));
    let xi = f["xi_exceed_fraction"].as_array().unwrap();
    assert!(xi[0].is_null() && xi[1..].iter().all(Value::is_number));
    let counts: u64 = f["k_control_counts"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(counts, 10);
}

#[test]
fn motoo_fractions_are_nested() {
    let s = results(&small(Experiment::Motoo));
    let f: Vec<f64> = s["report"]["fractions"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(f[1] <= f[0]);
    assert_eq!(s["class"], "Divergent");
}

#[test]
fn ballot_statistic_is_positive() {
    let s = ballot::run(&small(Experiment::ConditionedBallot)).unwrap().summary;
    assert_eq!(s.cells.len(), 4);
    assert!(s.cells.iter().all(|c| c.statistic > 0.0));
    assert_eq!(s.ratio_last_first.len(), 2);
    assert!(s.spread >= 1.0);
}

#[test]
fn ballot_rejects_t_outside_the_window() {
    let mut c = small(Experiment::ConditionedBallot);
    c.t_grid = vec![0.0, 2.0 * c.a];
    assert!(matches!(ballot::run(&c), Err(clqg_harness::HarnessError::Config(_))));
}

#[test]
fn ballot_with_no_acceptances_is_a_runtime_error() {
    let mut c = small(Experiment::ConditionedBallot);
    c.u = -50.0;
    let e = ballot::run(&c).err().unwrap();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn hausdorff_fixture_small() {
    let s = results(&small(Experiment::HausdorffFixture));
    assert!((s["square"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert!((s["segment"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}
