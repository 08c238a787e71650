//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored, every key may appear once and
//! unknown keys are rejected. `version` is mandatory.
//!
//! ```text
//! version = 1
//! experiment = ball-decay
//! N = 1024
//! domain = square
//! gauge.kind = parametric
//! gauge.theta = 0.5
//! replicas = 200
//! seed = 7
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clqg_core::chaos::G;
use clqg_core::gauge::{GaugeTriple, Psi};
use clqg_core::lattice::{Rect, Shape};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GreenCheck,
    FieldStats,
    MaxTail,
    NearExtremal,
    BallDecay,
    Spine,
    Motoo,
    Domination,
    BridgeLimit,
    Dichotomy,
    HausdorffFixture,
    ConditionedBallot,
}

impl Experiment {
    pub const ALL: [Experiment; 12] = [
        Experiment::GreenCheck,
        Experiment::FieldStats,
        Experiment::MaxTail,
        Experiment::NearExtremal,
        Experiment::BallDecay,
        Experiment::Spine,
        Experiment::Motoo,
        Experiment::Domination,
        Experiment::BridgeLimit,
        Experiment::Dichotomy,
        Experiment::HausdorffFixture,
        Experiment::ConditionedBallot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::GreenCheck => "green-check",
            Experiment::FieldStats => "field-stats",
            Experiment::MaxTail => "max-tail",
            Experiment::NearExtremal => "near-extremal",
            Experiment::BallDecay => "ball-decay",
            Experiment::Spine => "spine",
            Experiment::Motoo => "motoo",
            Experiment::Domination => "domination",
            Experiment::BridgeLimit => "bridge-limit",
            Experiment::Dichotomy => "dichotomy",
            Experiment::HausdorffFixture => "hausdorff-fixture",
            Experiment::ConditionedBallot => "conditioned-ballot",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| HarnessError::config(format!("unknown experiment `{s}`")))
    }
}

/// `square`, `rect x0 y0 w h` or `union x0 y0 w h; x0 y0 w h; ...`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DomainSpec {
    Square,
    Rect(Rect),
    Union(Vec<Rect>),
}

impl DomainSpec {
    pub fn shape(&self) -> Shape {
        match self {
            DomainSpec::Square => Shape::Rectangle(Rect::unit_square()),
            DomainSpec::Rect(r) => Shape::Rectangle(*r),
            DomainSpec::Union(b) => Shape::PolyominoUnion(b.clone()),
        }
    }

    fn render(&self) -> String {
        let rect = |r: &Rect| format!("{:?} {:?} {:?} {:?}", r.x0, r.y0, r.w, r.h);
        match self {
            DomainSpec::Square => "square".into(),
            DomainSpec::Rect(r) => format!("rect {}", rect(r)),
            DomainSpec::Union(b) => format!("union {}", b.iter().map(rect).collect::<Vec<_>>().join("; ")),
        }
    }
}

fn parse_rect(s: &str) -> Result<Rect> {
    let v: Vec<f64> = s.split_whitespace().map(parse_f64).collect::<Result<_>>()?;
    match v[..] {
        [x0, y0, w, h] => Ok(Rect::new(x0, y0, w, h)),
        _ => Err(HarnessError::config(format!("a box needs four numbers, got `{s}`"))),
    }
}

impl FromStr for DomainSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        match head {
            "square" if rest.trim().is_empty() => Ok(DomainSpec::Square),
            "rect" => Ok(DomainSpec::Rect(parse_rect(rest)?)),
            "union" => Ok(DomainSpec::Union(rest.split(';').map(parse_rect).collect::<Result<_>>()?)),
            _ => Err(HarnessError::config(format!("unknown domain `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PsiSpec {
    Parametric { theta: f64, c: f64 },
    Tabulated { knots: Vec<(f64, f64)> },
}

/// Gauge record `{kind, theta, c, gamma_scale}` or an inline knot table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeSpec {
    pub psi: PsiSpec,
    pub gamma_scale: f64,
    pub force: bool,
}

impl GaugeSpec {
    pub fn parametric(theta: f64) -> Self {
        GaugeSpec { psi: PsiSpec::Parametric { theta, c: 1.0 }, gamma_scale: 1.0, force: false }
    }

    pub fn build(&self) -> Result<GaugeTriple> {
        let psi = match &self.psi {
            PsiSpec::Parametric { theta, c } => Psi::Parametric { theta: *theta, c: *c },
            PsiSpec::Tabulated { knots } => Psi::Tabulated { knots: knots.clone() },
        };
        Ok(GaugeTriple::new(psi, self.gamma_scale).validate(self.force)?)
    }

    pub fn theta(&self) -> Option<f64> {
        match self.psi {
            PsiSpec::Parametric { theta, .. } => Some(theta),
            PsiSpec::Tabulated { .. } => None,
        }
    }

    fn render(&self, prefix: &str, out: &mut String) {
        match &self.psi {
            PsiSpec::Parametric { theta, c } => {
                let _ = writeln!(out, "{prefix}.kind = parametric\n{prefix}.theta = {theta:?}\n{prefix}.c = {c:?}");
            }
            PsiSpec::Tabulated { knots } => {
                let k: Vec<String> = knots.iter().map(|(t, p)| format!("{t:?}:{p:?}")).collect();
                let _ = writeln!(out, "{prefix}.kind = tabulated\n{prefix}.knots = {}", k.join(", "));
            }
        }
        let _ = writeln!(out, "{prefix}.gamma_scale = {:?}\n{prefix}.force = {}", self.gamma_scale, self.force);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpineMode {
    /// Spine values only, projected from the white noise.
    Projection,
    /// Full fields, measures and control variables.
    Field,
}

impl FromStr for SpineMode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projection" => Ok(SpineMode::Projection),
            "field" => Ok(SpineMode::Field),
            _ => Err(HarnessError::config(format!("unknown spine mode `{s}`"))),
        }
    }
}

/// Resolved configuration. Every field has a default except `version`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(rename = "N")]
    pub n: u32,
    pub domain: DomainSpec,
    pub gauge: GaugeSpec,
    pub alt_gauge: GaugeSpec,
    pub delta: f64,
    pub eta: f64,
    pub ell: u32,
    pub u: f64,
    pub a: f64,
    pub replicas: usize,
    pub seed: u64,
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub save_field: bool,

    /// Scales for the Green log-increment and the ballot cells.
    pub sizes: Vec<u32>,
    pub u_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub k_min: u32,
    pub k_max: Option<u32>,
    pub threshold: f64,
    pub spread_tolerance: f64,

    pub walks: usize,
    pub box_side: u32,
    pub entries: usize,
    pub check_sites: usize,

    pub spine_mode: SpineMode,
    pub tight_exponent: f64,

    pub horizons: Vec<f64>,
    pub t_start: f64,
    pub v: f64,
    pub b: f64,
    pub endpoint: f64,
    pub horizon: f64,
    pub lengths: Vec<f64>,
    pub grid_step: f64,
    pub budget: u64,

    pub level_min: u32,
    pub level_max: u32,
    pub cantor_depth: u32,
    pub points: usize,
    pub t_low: f64,
    pub t_high: f64,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            n: 256,
            domain: DomainSpec::Square,
            gauge: GaugeSpec::parametric(0.5),
            alt_gauge: GaugeSpec::parametric(2.0),
            delta: 0.4,
            eta: 0.2,
            ell: 4,
            u: 1.0,
            a: (2.0 * G * 2f64.ln()).sqrt(),
            replicas: 1,
            seed: 0,
            output_dir: PathBuf::from("out"),
            save_field: false,
            sizes: vec![64, 128, 256],
            u_grid: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            t_grid: vec![0.0, 0.2, 0.4, 0.6, 0.8],
            k_min: 3,
            k_max: None,
            threshold: 1.0,
            spread_tolerance: 4.0,
            walks: 100_000,
            box_side: 16,
            entries: 20,
            check_sites: 10,
            spine_mode: SpineMode::Projection,
            tight_exponent: 0.2,
            horizons: vec![1e3, 1e5],
            t_start: 10.0,
            v: 1.0,
            b: 1.0,
            endpoint: 0.0,
            horizon: 10.0,
            lengths: vec![10.0, 100.0],
            grid_step: 0.001,
            budget: clqg_core::bessel::DEFAULT_REJECTION_BUDGET,
            level_min: 4,
            level_max: 12,
            cantor_depth: 8,
            points: 200,
            t_low: 0.5,
            t_high: 100.0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(HarnessError::config(m));
        if self.replicas < 1 {
            return fail("replicas must be at least 1");
        }
        if self.n < 3 {
            return fail("N must be at least 3");
        }
        if !(self.eta > 0.0 && self.eta < 0.25) {
            return fail("eta must lie in (0, 1/4)");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail("delta must lie in (0, 1)");
        }
        if self.sizes.iter().any(|&s| s < 3) {
            return fail("every entry of sizes must be at least 3");
        }
        for (key, grid) in [("u_grid", &self.u_grid), ("t_grid", &self.t_grid), ("horizons", &self.horizons), ("lengths", &self.lengths)] {
            if !grid.windows(2).all(|w| w[0] < w[1]) {
                return Err(HarnessError::config(format!("{key} must be strictly increasing")));
            }
        }
        if self.level_min > self.level_max {
            return fail("level_min exceeds level_max");
        }
        if let Some(k) = self.k_max {
            if k < self.k_min {
                return fail("k_max is below k_min");
            }
        }
        Ok(())
    }

    /// Canonical text: every key in a fixed order, floats in round-trip form.
    /// `output_dir` is left out so results do not depend on where they are written.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let ints = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "version = {CONFIG_VERSION}");
        let _ = writeln!(s, "experiment = {}", self.experiment);
        let _ = writeln!(s, "N = {}", self.n);
        let _ = writeln!(s, "domain = {}", self.domain.render());
        self.gauge.render("gauge", &mut s);
        self.alt_gauge.render("alt_gauge", &mut s);
        let _ = writeln!(s, "delta = {:?}\neta = {:?}\nell = {}\nu = {:?}\na = {:?}", self.delta, self.eta, self.ell, self.u, self.a);
        let _ = writeln!(s, "replicas = {}\nseed = {}\nsave_field = {}", self.replicas, self.seed, self.save_field);
        let _ = writeln!(s, "sizes = {}\nu_grid = {}\nt_grid = {}", ints(&self.sizes), list(&self.u_grid), list(&self.t_grid));
        let _ = writeln!(s, "k_min = {}", self.k_min);
        if let Some(k) = self.k_max {
            let _ = writeln!(s, "k_max = {k}");
        }
        let _ = writeln!(s, "threshold = {:?}\nspread_tolerance = {:?}", self.threshold, self.spread_tolerance);
        let _ = writeln!(s, "walks = {}\nbox_side = {}\nentries = {}\ncheck_sites = {}", self.walks, self.box_side, self.entries, self.check_sites);
        let mode = match self.spine_mode {
            SpineMode::Projection => "projection",
            SpineMode::Field => "field",
        };
        let _ = writeln!(s, "spine_mode = {mode}\ntight_exponent = {:?}", self.tight_exponent);
        let _ = writeln!(s, "horizons = {}\nt_start = {:?}", list(&self.horizons), self.t_start);
        let _ = writeln!(s, "v = {:?}\nb = {:?}\nendpoint = {:?}\nhorizon = {:?}", self.v, self.b, self.endpoint, self.horizon);
        let _ = writeln!(s, "lengths = {}\ngrid_step = {:?}\nbudget = {}", list(&self.lengths), self.grid_step, self.budget);
        let _ = writeln!(s, "level_min = {}\nlevel_max = {}\ncantor_depth = {}", self.level_min, self.level_max, self.cantor_depth);
        let _ = writeln!(s, "points = {}\nt_low = {:?}\nt_high = {:?}", self.points, self.t_low, self.t_high);
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| HarnessError::config(format!("`{s}` is not a number")))?;
    if v.is_nan() {
        return Err(HarnessError::config("NaN is not allowed"));
    }
    Ok(v)
}

fn parse_int<T: FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| HarnessError::config(format!("`{s}` is not a valid integer")))
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(HarnessError::config(format!("`{s}` is not a boolean"))),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(item).collect()
}

fn parse_knots(s: &str) -> Result<Vec<(f64, f64)>> {
    parse_list(s, |k| {
        let (t, p) = k.split_once(':').ok_or_else(|| HarnessError::config(format!("knot `{k}` is not t:psi")))?;
        Ok((parse_f64(t)?, parse_f64(p)?))
    })
}

/// Key-value pairs that have not been consumed yet.
struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key).map(|(_, v)| v)
    }

    fn with<T>(&mut self, key: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
        self.take(key)
            .map(|v| parse(&v).map_err(|e| HarnessError::config(format!("{key}: {}", strip(e)))))
            .transpose()
    }

    fn set<T>(&mut self, key: &str, slot: &mut T, parse: impl Fn(&str) -> Result<T>) -> Result<()> {
        if let Some(v) = self.with(key, parse)? {
            *slot = v;
        }
        Ok(())
    }

    fn gauge(&mut self, prefix: &str, slot: &mut GaugeSpec) -> Result<()> {
        let key = |k: &str| format!("{prefix}.{k}");
        let kind = self.take(&key("kind"));
        let mut theta = None;
        let mut c = None;
        let mut knots = None;
        self.set(&key("theta"), &mut theta, |s| parse_f64(s).map(Some))?;
        self.set(&key("c"), &mut c, |s| parse_f64(s).map(Some))?;
        self.set(&key("knots"), &mut knots, |s| parse_knots(s).map(Some))?;
        self.set(&key("gamma_scale"), &mut slot.gamma_scale, parse_f64)?;
        self.set(&key("force"), &mut slot.force, parse_bool)?;
        let kind = match (kind.as_deref().map(str::trim), &slot.psi) {
            (Some(k), _) => k,
            (None, _) if knots.is_some() => "tabulated",
            (None, PsiSpec::Parametric { .. }) => "parametric",
            (None, PsiSpec::Tabulated { .. }) => "tabulated",
        };
        slot.psi = match (kind, &slot.psi) {
            ("parametric", PsiSpec::Parametric { theta: t0, c: c0 }) => {
                if knots.is_some() {
                    return Err(HarnessError::config(format!("{prefix}: knots given for a parametric gauge")));
                }
                PsiSpec::Parametric { theta: theta.unwrap_or(*t0), c: c.unwrap_or(*c0) }
            }
            ("parametric", _) => PsiSpec::Parametric { theta: theta.unwrap_or(1.0), c: c.unwrap_or(1.0) },
            ("tabulated", _) => {
                if theta.is_some() || c.is_some() {
                    return Err(HarnessError::config(format!("{prefix}: theta/c given for a tabulated gauge")));
                }
                let knots = knots.ok_or_else(|| HarnessError::config(format!("{prefix}.knots is required")))?;
                PsiSpec::Tabulated { knots }
            }
            (k, _) => return Err(HarnessError::config(format!("{prefix}.kind: unknown gauge kind `{k}`"))),
        };
        Ok(())
    }
}

fn strip(e: HarnessError) -> String {
    match e {
        HarnessError::Config(m) => m,
        other => other.to_string(),
    }
}

impl FromStr for ExperimentConfig {
    type Err = HarnessError;

    fn from_str(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::config(format!("line {}: expected `key = value`", no + 1)))?;
            let k = k.trim().to_string();
            if let Some((first, _)) = map.insert(k.clone(), (no + 1, v.trim().to_string())) {
                return Err(HarnessError::config(format!("line {}: `{k}` already set on line {first}", no + 1)));
            }
        }
        let mut e = Entries(map);
        let version: u32 = e
            .with("version", parse_int)?
            .ok_or_else(|| HarnessError::config("missing `version`"))?;
        if version != CONFIG_VERSION {
            return Err(HarnessError::config(format!("unsupported config version {version} (expected {CONFIG_VERSION})")));
        }
        let experiment: Experiment =
            e.with("experiment", str::parse)?.ok_or_else(|| HarnessError::config("missing `experiment`"))?;
        let mut c = ExperimentConfig::new(experiment);
        e.set("N", &mut c.n, parse_int)?;
        e.set("domain", &mut c.domain, str::parse)?;
        e.gauge("gauge", &mut c.gauge)?;
        e.gauge("alt_gauge", &mut c.alt_gauge)?;
        e.set("delta", &mut c.delta, parse_f64)?;
        e.set("eta", &mut c.eta, parse_f64)?;
        e.set("ell", &mut c.ell, parse_int)?;
        e.set("u", &mut c.u, parse_f64)?;
        e.set("a", &mut c.a, parse_f64)?;
        e.set("replicas", &mut c.replicas, parse_int)?;
        e.set("seed", &mut c.seed, parse_int)?;
        e.set("output_dir", &mut c.output_dir, |s| Ok(PathBuf::from(s.trim())))?;
        e.set("save_field", &mut c.save_field, parse_bool)?;
        e.set("sizes", &mut c.sizes, |s| parse_list(s, parse_int))?;
        e.set("u_grid", &mut c.u_grid, |s| parse_list(s, parse_f64))?;
        e.set("t_grid", &mut c.t_grid, |s| parse_list(s, parse_f64))?;
        e.set("k_min", &mut c.k_min, parse_int)?;
        e.set("k_max", &mut c.k_max, |s| parse_int(s).map(Some))?;
        e.set("threshold", &mut c.threshold, parse_f64)?;
        e.set("spread_tolerance", &mut c.spread_tolerance, parse_f64)?;
        e.set("walks", &mut c.walks, parse_int)?;
        e.set("box_side", &mut c.box_side, parse_int)?;
        e.set("entries", &mut c.entries, parse_int)?;
        e.set("check_sites", &mut c.check_sites, parse_int)?;
        e.set("spine_mode", &mut c.spine_mode, str::parse)?;
        e.set("tight_exponent", &mut c.tight_exponent, parse_f64)?;
        e.set("horizons", &mut c.horizons, |s| parse_list(s, parse_f64))?;
        e.set("t_start", &mut c.t_start, parse_f64)?;
        e.set("v", &mut c.v, parse_f64)?;
        e.set("b", &mut c.b, parse_f64)?;
        e.set("endpoint", &mut c.endpoint, parse_f64)?;
        e.set("horizon", &mut c.horizon, parse_f64)?;
        e.set("lengths", &mut c.lengths, |s| parse_list(s, parse_f64))?;
        e.set("grid_step", &mut c.grid_step, parse_f64)?;
        e.set("budget", &mut c.budget, parse_int)?;
        e.set("level_min", &mut c.level_min, parse_int)?;
        e.set("level_max", &mut c.level_max, parse_int)?;
        e.set("cantor_depth", &mut c.cantor_depth, parse_int)?;
        e.set("points", &mut c.points, parse_int)?;
        e.set("t_low", &mut c.t_low, parse_f64)?;
        e.set("t_high", &mut c.t_high, parse_f64)?;
        if let Some((key, (line, _))) = e.0.into_iter().next() {
            return Err(HarnessError::config(format!("line {line}: unknown key `{key}`")));
        }
        c.validate()?;
        Ok(c)
    }
}
