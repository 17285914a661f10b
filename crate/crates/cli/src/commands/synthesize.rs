use std::path::PathBuf;

use debtstress::ingest::write_cohort_csv;
use debtstress::synth::{synthesize_cohort, SynthParams};

use crate::{read_input, Failure, RunConfig};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, default_value_t = 183)]
    pub banks: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file overriding the synthetic-cohort parameters.
    #[arg(long, value_name = "FILE")]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: Args, config: &RunConfig) -> Result<(), Failure> {
    let params: SynthParams = match &args.params {
        Some(p) => serde_json::from_str(&read_input(p)?)
            .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => SynthParams::default(),
    };
    let seed = args.seed.or(config.seed).unwrap_or(0);
    let cohort =
        synthesize_cohort(args.banks, seed, &params).map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(e.into()))?;
    }
    write_cohort_csv(&cohort, &args.out)?;
    Ok(())
}
