//! Configuration, seeded replication and the experiment catalogue of the
//! `clqg` command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod replicas;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use output::{Report, VERSION};
pub use replicas::derive_seed;

/// Runs the experiment named in `cfg` and writes its files into `cfg.output_dir`.
pub fn run_and_write(cfg: &ExperimentConfig) -> Result<Report> {
    let report = experiments::run(cfg)?;
    report.write(cfg, &cfg.output_dir)?;
    Ok(report)
}
