//! `rows.csv`, `summary.json` and optional `field.bin` files.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clqg_core::gff::FieldSample;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;

pub const VERSION: &str = concat!("clqg ", env!("CARGO_PKG_VERSION"));

/// One CSV cell.
pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self}")
    }
}

impl Cell for Option<f64> {
    fn cell(&self) -> String {
        self.map(|x| x.cell()).unwrap_or_default()
    }
}

macro_rules! display_cell {
    ($($t:ty),*) => {$(
        impl Cell for $t {
            fn cell(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

display_cell!(u32, u64, usize, i64, bool, &str, String);

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::output::Cell::cell(&$x)),*]
    };
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { header: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// What an experiment hands back before anything is written.
pub struct Outcome<S> {
    pub summary: S,
    pub table: Table,
    pub fields: Vec<(String, FieldSample)>,
}

impl<S: Serialize> Outcome<S> {
    pub fn new(summary: S, table: Table) -> Self {
        Outcome { summary, table, fields: Vec::new() }
    }

    pub fn into_report(self, experiment: Experiment) -> Report {
        Report {
            experiment,
            summary: serde_json::to_value(&self.summary).expect("summaries serialize"),
            table: self.table,
            fields: self.fields,
        }
    }
}

pub struct Report {
    pub experiment: Experiment,
    pub summary: Value,
    pub table: Table,
    pub fields: Vec<(String, FieldSample)>,
}

/// Numerical tolerances of the model crate that affect reported numbers.
pub fn module_tolerances() -> BTreeMap<&'static str, BTreeMap<&'static str, f64>> {
    use clqg_core::{bessel, gauge, gff, hausdorff, linalg};
    let mut t = BTreeMap::new();
    t.insert(
        "gauge",
        BTreeMap::from([
            ("phi_tolerance", gauge::PHI_TOLERANCE),
            ("phi_truncation_cap", gauge::PHI_TRUNCATION_CAP),
            ("validation_horizon", gauge::VALIDATION_HORIZON),
        ]),
    );
    t.insert(
        "gff",
        BTreeMap::from([("dense_cap", gff::DEFAULT_DENSE_CAP as f64), ("solve_tolerance", linalg::SOLVE_TOLERANCE)]),
    );
    t.insert("bessel", BTreeMap::from([("rejection_budget", bessel::DEFAULT_REJECTION_BUDGET as f64)]));
    t.insert(
        "hausdorff",
        BTreeMap::from([
            ("cell_budget", hausdorff::CELL_BUDGET),
            ("max_level", hausdorff::DEFAULT_MAX_LEVEL as f64),
            ("class_fraction", hausdorff::DEFAULT_CLASS_FRACTION),
        ]),
    );
    t
}

impl Report {
    pub fn summary_json(&self, cfg: &ExperimentConfig) -> String {
        let doc = json!({
            "experiment": self.experiment,
            "version": VERSION,
            "config_hash": cfg.hash(),
            "config": cfg.canonical().lines().collect::<Vec<_>>(),
            "seed": cfg.seed,
            "replicas": cfg.replicas,
            "tolerances": module_tolerances(),
            "results": self.summary,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json");
        s.push('\n');
        s
    }

    /// Writes the report into `dir` and returns the paths written.
    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut paths = vec![dir.join("rows.csv"), dir.join("summary.json")];
        fs::write(&paths[0], self.table.to_csv())?;
        fs::write(&paths[1], self.summary_json(cfg))?;
        for (name, field) in &self.fields {
            let p = dir.join(name);
            let mut w = BufWriter::new(fs::File::create(&p)?);
            field.write_binary(&mut w)?;
            w.flush()?;
            paths.push(p);
        }
        Ok(paths)
    }
}
