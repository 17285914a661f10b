use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use debtstress::ingest::ingest_cohort;
use debtstress::reconstruction::{COHORT_FILE, MANIFEST_FILE};
use debtstress::risk::{aggregate_ensemble, median, LossSample, QuantileConvention, RiskReport};
use debtstress::Cohort;
use serde::Serialize;

use super::stress::{StressManifest, BANKS_FILE, DECOMPOSITION_FILE, GLOBAL_FILE, IMPACT_FILE};
use crate::config::{check_unit_closed, check_unit_open, DEFAULT_ALPHA, DEFAULT_QUADRANT};
use crate::output::{digest_file, OutputSet, Table};
use crate::{require_input, Failure, RunConfig, TOOL, VERSION};

pub const DENSITY_BINS: usize = 40;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Results directory written by `stress`; repeat to compare periods.
    #[arg(long, required = true)]
    pub results: Vec<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Read the VaR level as `1 - alpha` instead of `alpha`.
    #[arg(long)]
    pub literal_quantile: bool,
    /// Vulnerability threshold dividing the quadrants.
    #[arg(long)]
    pub quadrant_vulnerability: Option<f64>,
    /// Impact threshold dividing the quadrants.
    #[arg(long)]
    pub quadrant_impact: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Loaded stress results for one directory.
pub struct Results {
    pub name: String,
    pub manifest: StressManifest,
    pub manifest_digest: String,
    pub cohort: Cohort,
    pub samples: Vec<LossSample>,
    /// `(first, second, third)` per cell; third is `None` without fire sales.
    pub decomposition: Vec<(f64, f64, Option<f64>)>,
    /// Per bank, the impact on each network.
    pub impacts: Option<Vec<Vec<f64>>>,
}

fn reader(path: &Path) -> anyhow::Result<csv::Reader<std::fs::File>> {
    csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))
}

fn field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    path: &Path,
) -> anyhow::Result<T> {
    rec.get(i)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| anyhow!("{}: bad field {} in {:?}", path.display(), i, rec))
}

pub fn load_results(dir: &Path) -> anyhow::Result<Results> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: StressManifest = serde_json::from_str(
        &std::fs::read_to_string(&manifest_path)
            .with_context(|| format!("reading {}", manifest_path.display()))?,
    )
    .with_context(|| format!("parsing {}", manifest_path.display()))?;
    let cohort = ingest_cohort(&dir.join(COHORT_FILE), None)?.cohort;
    let n = cohort.len();

    let mut cells: BTreeMap<(usize, usize), LossSample> = BTreeMap::new();
    let path = dir.join(GLOBAL_FILE);
    for rec in reader(&path)?.records() {
        let rec = rec?;
        let key = (field(&rec, 0, &path)?, field(&rec, 1, &path)?);
        let round: usize = field(&rec, 2, &path)?;
        let cell = cells.entry(key).or_insert_with(|| LossSample {
            network: key.0,
            scenario: key.1,
            shock: 0.0,
            h: Vec::new(),
            global: Vec::new(),
        });
        cell.shock = field(&rec, 3, &path)?;
        if cell.global.len() < round {
            cell.global.resize(round, 0.0);
        }
        cell.global[round - 1] = field(&rec, 4, &path)?;
    }
    let path = dir.join(BANKS_FILE);
    let mut r = reader(&path)?;
    let header = r.headers()?.clone();
    if header.len() != n + 3 || header.iter().skip(3).zip(cohort.ids()).any(|(a, b)| a != b) {
        return Err(anyhow!(
            "{}: bank columns do not match {}",
            path.display(),
            COHORT_FILE
        ));
    }
    for rec in r.records() {
        let rec = rec?;
        let key = (field(&rec, 0, &path)?, field(&rec, 1, &path)?);
        let round: usize = field(&rec, 2, &path)?;
        let h = (0..n)
            .map(|i| field(&rec, i + 3, &path))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        let cell = cells.get_mut(&key).ok_or_else(|| {
            anyhow!(
                "{}: cell {key:?} missing from {GLOBAL_FILE}",
                path.display()
            )
        })?;
        if cell.h.len() < round {
            cell.h.resize(round, Vec::new());
        }
        cell.h[round - 1] = h;
    }

    let path = dir.join(DECOMPOSITION_FILE);
    let mut decomposition = Vec::new();
    for rec in reader(&path)?.records() {
        let rec = rec?;
        let third = match rec.get(5) {
            Some("") | None => None,
            Some(_) => Some(field(&rec, 5, &path)?),
        };
        decomposition.push((field(&rec, 3, &path)?, field(&rec, 4, &path)?, third));
    }

    let path = dir.join(IMPACT_FILE);
    let impacts = if path.exists() {
        let mut per_bank = vec![Vec::new(); n];
        for rec in reader(&path)?.records() {
            let rec = rec?;
            let id = rec.get(1).unwrap_or_default();
            let pos = cohort
                .position(id)
                .ok_or_else(|| anyhow!("{}: unknown bank `{id}`", path.display()))?;
            per_bank[pos].push(field(&rec, 2, &path)?);
        }
        Some(per_bank)
    } else {
        None
    };

    Ok(Results {
        name: dir
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        manifest_digest: digest_file(&manifest_path)?,
        manifest,
        cohort,
        samples: cells.into_values().collect(),
        decomposition,
        impacts,
    })
}

pub fn quadrant(vulnerability: f64, impact: f64, v_threshold: f64, i_threshold: f64) -> String {
    let level = |x: f64, t: f64| if x >= t { "high" } else { "low" };
    format!(
        "{} vulnerability / {} impact",
        level(vulnerability, v_threshold),
        level(impact, i_threshold)
    )
}

/// Equal-width histogram of `values` on `[0, upper]`, as `(lo, hi, count)`.
pub fn histogram(values: &[f64], upper: f64, bins: usize) -> Vec<(f64, f64, usize)> {
    let width = if upper > 0.0 {
        upper / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = ((v / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (k as f64 * width, (k + 1) as f64 * width, c))
        .collect()
}

#[derive(Serialize)]
struct RunSummary<'a> {
    results: &'a str,
    manifest_sha256: &'a str,
    period: i32,
    bank_ids: Vec<&'a str>,
    risk: &'a RiskReport,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    tool: &'a str,
    version: &'a str,
    manifest: &'a str,
    alpha: f64,
    convention: QuantileConvention,
    quadrant_vulnerability: f64,
    quadrant_impact: f64,
    runs: Vec<RunSummary<'a>>,
}

#[derive(Serialize)]
struct ReportManifest {
    tool: String,
    version: String,
    command: String,
    alpha: f64,
    convention: QuantileConvention,
    quadrant_vulnerability: f64,
    quadrant_impact: f64,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

pub fn run(args: Args, config: &RunConfig) -> Result<(), Failure> {
    let alpha = check_unit_open(
        "alpha",
        args.alpha.or(config.alpha).unwrap_or(DEFAULT_ALPHA),
    )?;
    let qv = check_unit_closed(
        "quadrant vulnerability threshold",
        args.quadrant_vulnerability
            .or(config.quadrant_vulnerability)
            .unwrap_or(DEFAULT_QUADRANT),
    )?;
    let qi = check_unit_closed(
        "quadrant impact threshold",
        args.quadrant_impact
            .or(config.quadrant_impact)
            .unwrap_or(DEFAULT_QUADRANT),
    )?;
    let convention = if args.literal_quantile {
        QuantileConvention::Literal
    } else {
        QuantileConvention::UpperTail
    };
    for dir in &args.results {
        require_input(&dir.join(MANIFEST_FILE))?;
    }
    let runs = args
        .results
        .iter()
        .map(|d| load_results(d))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let reports = runs
        .iter()
        .map(|r| aggregate_ensemble(&r.samples, alpha, convention))
        .collect::<Result<Vec<_>, _>>()?;

    let mut global = Table::new(["period", "results", "round", "var", "cvar", "median"]);
    let mut per_bank = Table::new([
        "period", "results", "bank_id", "round", "var", "cvar", "median",
    ]);
    let mut scenarios = Table::new([
        "period", "results", "scenario", "shock", "round", "median_h",
    ]);
    let mut decomposition = Table::new(["period", "results", "first", "second", "third", "total"]);
    let mut first_vs_second = Table::new([
        "period",
        "results",
        "bank_id",
        "first",
        "second",
        "total_assets",
        "interbank_leverage",
    ]);
    let mut vuln_impact = Table::new([
        "period",
        "results",
        "bank_id",
        "vulnerability",
        "impact",
        "quadrant",
        "total_assets",
        "interbank_leverage",
    ]);
    let mut density = Table::new([
        "period",
        "results",
        "round",
        "bin_lower",
        "bin_upper",
        "count",
        "density",
        "var",
        "cvar",
    ]);

    for (run, report) in runs.iter().zip(&reports) {
        let period = run.manifest.period.to_string();
        let name = run.name.as_str();
        let ids: Vec<&str> = run.cohort.ids().collect();
        for g in &report.global {
            global.row([
                period.clone(),
                name.into(),
                g.round.to_string(),
                g.var.to_string(),
                g.cvar.to_string(),
                g.median.to_string(),
            ]);
        }
        for b in &report.per_bank {
            per_bank.row([
                period.clone(),
                name.into(),
                ids[b.bank].to_string(),
                b.round.to_string(),
                b.var.to_string(),
                b.cvar.to_string(),
                b.median.to_string(),
            ]);
        }
        for s in &report.scenario_medians {
            for (t, h) in s.global.iter().enumerate() {
                scenarios.row([
                    period.clone(),
                    name.into(),
                    s.scenario.to_string(),
                    s.shock.to_string(),
                    (t + 1).to_string(),
                    h.to_string(),
                ]);
            }
        }

        let col = |k: usize| -> Vec<f64> {
            run.decomposition
                .iter()
                .filter_map(|d| match k {
                    0 => Some(d.0),
                    1 => Some(d.1),
                    _ => d.2,
                })
                .collect()
        };
        let (first, second, third) = (median(&col(0)), median(&col(1)), median(&col(2)));
        let total = first.unwrap_or(0.0) + second.unwrap_or(0.0) + third.unwrap_or(0.0);
        let show = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        decomposition.row([
            period.clone(),
            name.into(),
            show(first),
            show(second),
            show(third),
            total.to_string(),
        ]);

        let median_h = |round: usize, bank: usize| {
            report
                .per_bank
                .iter()
                .find(|b| b.bank == bank && b.round == round)
                .map_or(0.0, |b| b.median)
        };
        for (i, bank) in run.cohort.banks().iter().enumerate() {
            let lb = bank.interbank_assets / bank.equity;
            first_vs_second.row([
                period.clone(),
                name.into(),
                bank.bank_id.clone(),
                median_h(1, i).to_string(),
                median_h(2, i).to_string(),
                bank.total_assets.to_string(),
                lb.to_string(),
            ]);
            if let Some(imp) = &run.impacts {
                let v = median_h(2, i);
                let dr = median(&imp[i]).unwrap_or(0.0);
                vuln_impact.row([
                    period.clone(),
                    name.into(),
                    bank.bank_id.clone(),
                    v.to_string(),
                    dr.to_string(),
                    quadrant(v, dr, qv, qi),
                    bank.total_assets.to_string(),
                    lb.to_string(),
                ]);
            }
        }

        let upper = run
            .samples
            .iter()
            .flat_map(|s| s.global.iter().copied())
            .fold(0.0, f64::max);
        for g in &report.global {
            let values: Vec<f64> = run.samples.iter().map(|s| s.global[g.round - 1]).collect();
            let total = values.len() as f64;
            for (lo, hi, count) in histogram(&values, upper, DENSITY_BINS) {
                density.row([
                    period.clone(),
                    name.into(),
                    g.round.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                    count.to_string(),
                    (count as f64 / (total * (hi - lo))).to_string(),
                    g.var.to_string(),
                    g.cvar.to_string(),
                ]);
            }
        }
    }

    let mut outputs = OutputSet::default();
    outputs.add("global_risk.csv", global.into_bytes());
    outputs.add("per_bank_risk.csv", per_bank.into_bytes());
    outputs.add("scenario_losses.csv", scenarios.into_bytes());
    outputs.add("decomposition.csv", decomposition.into_bytes());
    outputs.add("first_vs_second.csv", first_vs_second.into_bytes());
    if runs.iter().any(|r| r.impacts.is_some()) {
        outputs.add("vulnerability_impact.csv", vuln_impact.into_bytes());
    }
    outputs.add("loss_density.csv", density.into_bytes());
    let report_file = ReportFile {
        tool: TOOL,
        version: VERSION,
        manifest: MANIFEST_FILE,
        alpha,
        convention,
        quadrant_vulnerability: qv,
        quadrant_impact: qi,
        runs: runs
            .iter()
            .zip(&reports)
            .map(|(r, risk)| RunSummary {
                results: &r.name,
                manifest_sha256: &r.manifest_digest,
                period: r.manifest.period,
                bank_ids: r.cohort.ids().collect(),
                risk,
            })
            .collect(),
    };
    outputs.add_json("risk_report.json", &report_file)?;

    let manifest = ReportManifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: "report".into(),
        alpha,
        convention,
        quadrant_vulnerability: qv,
        quadrant_impact: qi,
        inputs: runs
            .iter()
            .map(|r| {
                (
                    format!("{}/{}", r.name, MANIFEST_FILE),
                    r.manifest_digest.clone(),
                )
            })
            .collect(),
        outputs: outputs.digests(),
    };
    outputs.add_json(MANIFEST_FILE, &manifest)?;
    outputs.write_all(&args.out)?;
    Ok(())
}
