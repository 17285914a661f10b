use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use debtstress::contagion::impact_vector;
use debtstress::fire_sales::SaleFlag;
use debtstress::reconstruction::{load_ensemble, COHORT_FILE, MANIFEST_FILE};
use debtstress::scenario::{draw_shocks, ScenarioSpec, ShockKind};
use debtstress::stress::run_cell;
use debtstress::{derive_leverage, seed, LeverageNetworks};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SCENARIO_LABEL;
use crate::config::{check_unit_closed, DEFAULT_ETA};
use crate::output::{digest_bytes, digest_file, OutputSet, Table, Timings};
use crate::{read_input, require_input, Dynamics, Failure, RunConfig, TOOL, VERSION};

pub const GLOBAL_FILE: &str = "global.csv";
pub const BANKS_FILE: &str = "banks.csv";
pub const DECOMPOSITION_FILE: &str = "decomposition.csv";
pub const FIRE_SALES_FILE: &str = "fire_sales.csv";
pub const IMPACT_FILE: &str = "impact.csv";

/// Cells handled per parallel batch; bounds memory on large runs.
const BATCH: usize = 512;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Ensemble directory written by `reconstruct`.
    #[arg(long)]
    pub networks: PathBuf,
    /// `fixed:R` or `beta:A,B,MIN,MAX,DRAWS[,rescale|reject]`.
    #[arg(long, conflicts_with = "scenario")]
    pub shock: Option<String>,
    /// JSON scenario file; may also set dynamics and eta.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub dynamics: Option<Dynamics>,
    /// Price impact of fire sales; 0 turns the third round off.
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also compute the impact of every bank's default on every network.
    #[arg(long)]
    pub impact: bool,
    #[arg(long)]
    pub out: PathBuf,
}

/// Settings a results directory was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressConfig {
    pub seed: u64,
    pub scenario_seed: u64,
    pub scenario: ScenarioSpec,
    pub dynamics: Dynamics,
    pub eta: Option<f64>,
    pub impact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StressManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: StressConfig,
    pub period: i32,
    pub networks: usize,
    pub scenarios: usize,
    pub rounds: usize,
    /// Digests of the ensemble files this run read.
    pub inputs: BTreeMap<String, String>,
    /// Digests of every file written next to this manifest.
    pub outputs: BTreeMap<String, String>,
}

fn resolve_scenario(args: &Args, config: &RunConfig) -> Result<ScenarioSpec, Failure> {
    let file = args.scenario.clone().or_else(|| {
        args.shock
            .is_none()
            .then(|| config.scenario.clone())
            .flatten()
    });
    let mut spec = if let Some(path) = file {
        serde_json::from_str::<ScenarioSpec>(&read_input(&path)?)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
    } else {
        let text = args
            .shock
            .clone()
            .or_else(|| config.shock.clone())
            .ok_or_else(|| Failure::usage("one of --shock or --scenario is required"))?;
        let kind: ShockKind = text
            .parse()
            .map_err(|e: debtstress::Error| Failure::usage(e.to_string()))?;
        ScenarioSpec::new(kind, 0)
    };
    spec.kind
        .validate()
        .map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(d) = args.dynamics.or(config.dynamics) {
        spec.dynamics = d.distress();
    }
    if let Some(eta) = args.eta.or(config.eta) {
        spec.eta = Some(eta);
    }
    let eta = spec.eta.unwrap_or(DEFAULT_ETA);
    spec.eta = Some(check_unit_closed("eta", eta)?);
    Ok(spec)
}

fn flag_count(flags: &[Option<SaleFlag>], flag: SaleFlag) -> usize {
    flags.iter().filter(|f| **f == Some(flag)).count()
}

pub fn run(args: Args, config: &RunConfig) -> Result<(), Failure> {
    require_input(&args.networks.join(MANIFEST_FILE))?;
    let mut spec = resolve_scenario(&args, config)?;
    let seed_value = args.seed.or(config.seed).unwrap_or(0);
    spec.seed = seed::derive(seed_value, SCENARIO_LABEL);
    let impact = args.impact || config.impact.unwrap_or(false);

    let mut timings = Timings::default();
    let start = Instant::now();
    let ensemble = load_ensemble(&args.networks)?;
    let cohort = &ensemble.cohort;
    let leverage: Vec<LeverageNetworks> = ensemble
        .members
        .iter()
        .map(|m| derive_leverage(cohort, m))
        .collect::<Result<_, _>>()?;
    let shocks = draw_shocks(&spec, cohort.asset_classes())?;
    let quantities = cohort.external_assets();
    let ids: Vec<&str> = cohort.ids().collect();
    timings.record("load", start);

    let eta = spec.eta;
    let f = spec.dynamics;
    let rounds = if eta.is_some() { 3 } else { 2 };
    let mut global = Table::new(["network", "scenario", "round", "shock", "h"]);
    let mut banks = Table::new(
        ["network", "scenario", "round"]
            .into_iter()
            .chain(ids.iter().copied()),
    );
    let mut decomposition = Table::new([
        "network",
        "scenario",
        "interbank_rounds",
        "first",
        "second",
        "third",
        "total",
    ]);
    let mut fire = Table::new([
        "network",
        "scenario",
        "sold_fraction",
        "final_price",
        "defaulted",
        "capped",
        "not_levered",
    ]);

    let start = Instant::now();
    let cells: Vec<(usize, usize)> = (0..leverage.len())
        .flat_map(|n| (0..shocks.len()).map(move |s| (n, s)))
        .collect();
    for batch in cells.chunks(BATCH) {
        let outcomes = batch
            .par_iter()
            .map(|&(n, s)| run_cell(&leverage[n], &quantities, &shocks[s], f, eta, n, s))
            .collect::<Result<Vec<_>, _>>()?;
        for out in outcomes {
            let smp = &out.sample;
            let (n, s) = (smp.network.to_string(), smp.scenario.to_string());
            for t in 0..smp.rounds() {
                let round = (t + 1).to_string();
                global.row([
                    n.clone(),
                    s.clone(),
                    round.clone(),
                    smp.shock.to_string(),
                    smp.global[t].to_string(),
                ]);
                banks.row(
                    [n.clone(), s.clone(), round]
                        .into_iter()
                        .chain(smp.h[t].iter().map(f64::to_string)),
                );
            }
            let t_end = out
                .state
                .terminated_at
                .unwrap_or(out.state.round)
                .to_string();
            let (first, second) = (smp.global[0], smp.global[1] - smp.global[0]);
            match &out.fire_sales {
                Some(fs) => {
                    let d = fs.decomposition;
                    decomposition.row([
                        n.clone(),
                        s.clone(),
                        t_end,
                        d.first.to_string(),
                        d.second.to_string(),
                        d.third.to_string(),
                        fs.global_final.to_string(),
                    ]);
                    fire.row([
                        n,
                        s,
                        fs.sold_fraction.to_string(),
                        fs.final_price.to_string(),
                        flag_count(&fs.flags, SaleFlag::Defaulted).to_string(),
                        flag_count(&fs.flags, SaleFlag::Capped).to_string(),
                        flag_count(&fs.flags, SaleFlag::NotLevered).to_string(),
                    ]);
                }
                None => decomposition.row([
                    n,
                    s,
                    t_end,
                    first.to_string(),
                    second.to_string(),
                    String::new(),
                    smp.global[1].to_string(),
                ]),
            }
        }
    }
    timings.record("stress", start);

    let mut outputs = OutputSet::default();
    outputs.add(GLOBAL_FILE, global.into_bytes());
    outputs.add(BANKS_FILE, banks.into_bytes());
    outputs.add(DECOMPOSITION_FILE, decomposition.into_bytes());
    if eta.is_some() {
        outputs.add(FIRE_SALES_FILE, fire.into_bytes());
    }
    if impact {
        let start = Instant::now();
        let impacts: Vec<_> = leverage.par_iter().map(|l| impact_vector(l, f)).collect();
        let mut t = Table::new(["network", "bank_id", "dr", "dr_net", "monetary"]);
        for (n, row) in impacts.iter().enumerate() {
            for (id, imp) in ids.iter().zip(row) {
                t.row([
                    n.to_string(),
                    id.to_string(),
                    imp.relative.to_string(),
                    imp.net.to_string(),
                    imp.monetary.to_string(),
                ]);
            }
        }
        outputs.add(IMPACT_FILE, t.into_bytes());
        timings.record("impact", start);
    }
    let cohort_bytes = std::fs::read(ensemble.dir.join(&ensemble.manifest.cohort_file))
        .map_err(|e| Failure::Runtime(e.into()))?;
    outputs.add(COHORT_FILE, cohort_bytes);

    let mut inputs = BTreeMap::new();
    inputs.insert(
        MANIFEST_FILE.to_string(),
        digest_file(&args.networks.join(MANIFEST_FILE))?,
    );
    let mut networks_digest = Vec::new();
    for name in &ensemble.manifest.networks {
        networks_digest.extend_from_slice(digest_file(&args.networks.join(name))?.as_bytes());
    }
    inputs.insert("networks".into(), digest_bytes(&networks_digest));

    let manifest = StressManifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: "stress".into(),
        config: StressConfig {
            seed: seed_value,
            scenario_seed: spec.seed,
            dynamics: Dynamics::from_distress(spec.dynamics),
            eta,
            impact,
            scenario: spec,
        },
        period: cohort.banks().first().map_or(0, |b| b.period),
        networks: leverage.len(),
        scenarios: shocks.len(),
        rounds,
        inputs,
        outputs: outputs.digests(),
    };
    outputs.add_json(MANIFEST_FILE, &manifest)?;
    outputs.write_all(&args.out)?;
    timings.write(&args.out)?;
    Ok(())
}
