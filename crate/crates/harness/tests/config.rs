use clqg_harness::config::{DomainSpec, GaugeSpec, PsiSpec, SpineMode, CONFIG_VERSION};
use clqg_harness::{Experiment, ExperimentConfig, HarnessError};
use proptest::prelude::*;

fn parse(text: &str) -> Result<ExperimentConfig, HarnessError> {
    text.parse()
}

#[test]
fn minimal_config_takes_defaults() {
    let c = parse("version = 1\nexperiment = max-tail\n").unwrap();
    assert_eq!(c, ExperimentConfig::new(Experiment::MaxTail));
}

#[test]
fn full_config() {
    let text = "
        # a comment
        version = 1
        experiment = dichotomy
        N = 1024          # trailing comment
        domain = union 0 0 1 0.5; 0 0.5 0.5 0.5
        gauge.kind = parametric
        gauge.theta = 0.5
        gauge.c = 2
        alt_gauge.knots = 1:1, 10:0.5, 100:0.25
        alt_gauge.force = true
        delta = 0.3
        eta = 0.1
        ell = 6
        replicas = 200
        seed = 18446744073709551615
        k_max = 4
        spine_mode = field
        horizons = 1e3, 1e5
    ";
    let c = parse(text).unwrap();
    assert_eq!(c.experiment, Experiment::Dichotomy);
    assert_eq!(c.n, 1024);
    assert!(matches!(c.domain, DomainSpec::Union(ref b) if b.len() == 2));
    assert_eq!(c.gauge.psi, PsiSpec::Parametric { theta: 0.5, c: 2.0 });
    assert_eq!(c.alt_gauge.psi, PsiSpec::Tabulated { knots: vec![(1.0, 1.0), (10.0, 0.5), (100.0, 0.25)] });
    assert!(c.alt_gauge.force);
    assert_eq!((c.delta, c.eta, c.ell, c.replicas), (0.3, 0.1, 6, 200));
    assert_eq!(c.seed, u64::MAX);
    assert_eq!(c.k_max, Some(4));
    assert_eq!(c.spine_mode, SpineMode::Field);
    assert_eq!(c.horizons, vec![1e3, 1e5]);
}

#[test]
fn rejected_configs() {
    let cases = [
        ("experiment = spine\n", "missing `version`"),
        ("version = 2\nexperiment = spine\n", "unsupported config version"),
        ("version = 1\n", "missing `experiment`"),
        ("version = 1\nexperiment = nope\n", "unknown experiment"),
        ("version = 1\nexperiment = spine\nfoo = 1\n", "unknown key `foo`"),
        ("version = 1\nexperiment = spine\nN = 5\nN = 6\n", "already set"),
        ("version = 1\nexperiment = spine\nN = 2\n", "N must be at least 3"),
        ("version = 1\nexperiment = spine\nreplicas = 0\n", "replicas"),
        ("version = 1\nexperiment = spine\neta = 0.25\n", "eta"),
        ("version = 1\nexperiment = spine\nN = abc\n", "N:"),
        ("version = 1\nexperiment = spine\ndomain = circle\n", "unknown domain"),
        ("version = 1\nexperiment = spine\ngauge.kind = weird\n", "unknown gauge kind"),
        ("version = 1\nexperiment = spine\ngauge.kind = tabulated\n", "knots is required"),
        ("version = 1\nexperiment = spine\nu_grid = 1, 0.5\n", "strictly increasing"),
        ("version = 1\nexperiment = spine\njust text\n", "expected `key = value`"),
    ];
    for (text, needle) in cases {
        match parse(text) {
            Err(HarnessError::Config(m)) => assert!(m.contains(needle), "{text:?}: {m}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn config_errors_exit_with_one() {
    let e = parse("version = 1\n").unwrap_err();
    assert_eq!(e.exit_code(), 1);
    let e: HarnessError = clqg_core::Error::EmptyGrid.into();
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn hash_ignores_output_dir_only() {
    let a = parse("version = 1\nexperiment = spine\noutput_dir = x\n").unwrap();
    let b = parse("version = 1\nexperiment = spine\noutput_dir = y\n").unwrap();
    let c = parse("version = 1\nexperiment = spine\nseed = 1\n").unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn canonical_text_starts_with_the_version() {
    let c = ExperimentConfig::new(Experiment::Motoo);
    assert!(c.canonical().starts_with(&format!("version = {CONFIG_VERSION}\nexperiment = motoo\n")));
}

fn experiment() -> impl Strategy<Value = Experiment> {
    (0..Experiment::ALL.len()).prop_map(|i| Experiment::ALL[i])
}

proptest! {
    #[test]
    fn canonical_text_round_trips(
        e in experiment(),
        n in 3u32..5000,
        delta in 0.01f64..0.99,
        eta in 0.001f64..0.249,
        seed in any::<u64>(),
        replicas in 1usize..10_000,
        theta in 0.1f64..4.0,
        knots in prop::collection::vec((0.1f64..10.0, 0.1f64..10.0), 1..5),
        rect in (0.0f64..1.0, 0.0f64..1.0, 0.1f64..2.0, 0.1f64..2.0),
        k_max in prop::option::of(3u32..10),
    ) {
        let mut c = ExperimentConfig::new(e);
        c.n = n;
        c.delta = delta;
        c.eta = eta;
        c.seed = seed;
        c.replicas = replicas;
        c.gauge = GaugeSpec::parametric(theta);
        c.alt_gauge = GaugeSpec { psi: PsiSpec::Tabulated { knots }, gamma_scale: 1.5, force: true };
        c.domain = DomainSpec::Rect(clqg_core::lattice::Rect::new(rect.0, rect.1, rect.2, rect.3));
        c.k_max = k_max;
        let back: ExperimentConfig = c.canonical().parse().unwrap();
        prop_assert_eq!(back, c);
    }
}
