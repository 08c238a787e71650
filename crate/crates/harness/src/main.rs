use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use clqg_harness::{run_and_write, Experiment, ExperimentConfig, HarnessError};

/// Seeded experiments on the critical chaos of the 2D discrete Gaussian free field.
#[derive(Parser, Debug)]
#[command(name = "clqg", version)]
struct Cli {
    /// Experiment name; must match `experiment` in the config file.
    experiment: String,
    /// Flat key=value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the replica count.
    #[arg(long)]
    replicas: Option<usize>,
    /// Overrides the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let wanted: Experiment = cli.experiment.parse()?;
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if cfg.experiment != wanted {
        return Err(HarnessError::config(format!("config is for `{}`, not `{wanted}`", cfg.experiment)));
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.replicas {
        cfg.replicas = r;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = resolve(&cli).and_then(|cfg| run_and_write(&cfg).map(|_| cfg));
    match result {
        Ok(cfg) => {
            println!("{}: wrote {}", cfg.experiment, cfg.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("clqg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
