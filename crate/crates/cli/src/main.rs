use std::path::PathBuf;

use anyhow::{anyhow, Result};
use bouss_gd::config::{ExperimentId, ExperimentSpec};
use bouss_gd::experiments::run_experiment;
use bouss_gd::output::RunContext;
use clap::Parser;

/// Boussinesq solver with modular grad-div stabilization.
#[derive(Parser)]
#[command(name = "bouss-gd", version)]
struct Args {
    /// spatial-rates, temporal-rates, pressure-robust, rayleigh-sweep,
    /// element-study or marsigli
    experiment: String,
    /// `key = value` overrides of the built-in configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Include the expensive rows (finest mesh, finer Marsigli grid).
    #[arg(long)]
    full: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let id = ExperimentId::parse(&args.experiment).ok_or_else(|| {
        let known: Vec<_> = ExperimentId::ALL.iter().map(|i| i.as_str()).collect();
        anyhow!("unknown experiment `{}`; expected one of {}", args.experiment, known.join(", "))
    })?;
    let spec = match &args.config {
        Some(path) => ExperimentSpec::from_file(id, args.full, path)?,
        None => ExperimentSpec::defaults(id, args.full),
    };
    let ctx = RunContext::create(&args.out)?;
    let report = run_experiment(&spec, &ctx)?;
    print!("{}", report.table().render());
    let identity = report.identity();
    if identity.steps > 0 && !identity.holds() {
        eprintln!("warning: energy identity residual {:.3e} exceeds tolerance", identity.max_residual);
    }
    Ok(())
}
