use std::path::PathBuf;
use std::time::Instant;

use debtstress::ingest::{attach_breakdown, ingest_cohort, RejectionReport};
use debtstress::reconstruction::{generate_ensemble, save_ensemble, EnsembleSettings};
use debtstress::seed;
use serde_json::json;

use super::RECONSTRUCT_LABEL;
use crate::config::{check_unit_open, DEFAULT_DENSITY, DEFAULT_SAMPLES};
use crate::output::{digest_file, file_name, json_string, Timings};
use crate::{require_input, Failure, RunConfig, TOOL, VERSION};

pub const REJECTIONS_FILE: &str = "rejections.json";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Balance-sheet CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Optional external-asset breakdown CSV (`bank_id,asset_class,amount`).
    #[arg(long)]
    pub external: Option<PathBuf>,
    /// Period to reconstruct; defaults to the latest in the input.
    #[arg(long)]
    pub period: Option<i32>,
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub ipf_tolerance: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args, config: &RunConfig) -> Result<(), Failure> {
    require_input(&args.input)?;
    if let Some(p) = &args.external {
        require_input(p)?;
    }
    let density = check_unit_open(
        "density",
        args.density.or(config.density).unwrap_or(DEFAULT_DENSITY),
    )?;
    let samples = args.samples.or(config.samples).unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(Failure::usage("--samples must be positive"));
    }
    let seed_value = args.seed.or(config.seed).unwrap_or(0);
    let period = args.period.or(config.period);
    let mut settings = EnsembleSettings::new(
        density,
        samples,
        seed::derive(seed_value, RECONSTRUCT_LABEL),
    );
    if let Some(tol) = args.ipf_tolerance.or(config.ipf_tolerance) {
        if tol.is_nan() || tol <= 0.0 {
            return Err(Failure::usage("--ipf-tolerance must be positive"));
        }
        settings.ipf.tolerance = tol;
    }

    let mut timings = Timings::default();
    let start = Instant::now();
    let ingested = ingest_cohort(&args.input, period)?;
    let mut cohort = ingested.cohort.clone();
    if let Some(p) = &args.external {
        let ids = cohort.ids().map(String::from).collect();
        cohort = attach_breakdown(cohort, p, &ids)?;
    }
    timings.record("ingest", start);

    let start = Instant::now();
    let ensemble = generate_ensemble(&cohort, settings)?;
    timings.record("reconstruct", start);

    let mut inputs = serde_json::Map::new();
    inputs.insert(file_name(&args.input), digest_file(&args.input)?.into());
    if let Some(p) = &args.external {
        inputs.insert(file_name(p), digest_file(p)?.into());
    }
    let run = json!({
        "tool": TOOL,
        "version": VERSION,
        "command": "reconstruct",
        "config": {
            "seed": seed_value,
            "period": ingested.period,
            "density": density,
            "samples": samples,
            "ipf_tolerance": settings.ipf.tolerance,
            "ipf_max_iterations": settings.ipf.max_iterations,
        },
        "inputs": inputs,
        "converged_fraction": ensemble.converged_fraction(),
        "mean_links": ensemble.mean_links(),
    });
    let start = Instant::now();
    save_ensemble(&args.out, &cohort, &ensemble, run)?;
    let report = RejectionReport {
        period: ingested.period,
        rejections: &ingested.rejections,
        imputed: &ingested.imputed,
    };
    std::fs::write(args.out.join(REJECTIONS_FILE), json_string(&report)?)
        .map_err(|e| Failure::Runtime(e.into()))?;
    timings.record("write", start);
    timings.write(&args.out)?;

    let unconverged = ensemble
        .diagnostics
        .iter()
        .filter(|d| !d.fit.converged)
        .count();
    if unconverged > 0 {
        eprintln!("warning: {unconverged} of {samples} networks did not reach the IPF tolerance");
    }
    if !ingested.rejections.is_empty() {
        eprintln!(
            "note: {} records left out, see {}",
            ingested.rejections.len(),
            args.out.join(REJECTIONS_FILE).display()
        );
    }
    Ok(())
}
