use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    fit_weights, sample_adjacency, Adjacency, FitDiagnostics, IpfSettings, ReconstructionModel,
};
use crate::error::{Error, Result};
use crate::ingest::{
    attach_breakdown, csv_field, ingest_cohort, write_breakdown_csv, write_cohort_csv,
};
use crate::model::{Cohort, ExposureMatrix};
use crate::seed;

/// Sampling attempts per ensemble slot before giving up.
pub const MAX_RESAMPLES: usize = 100;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const COHORT_FILE: &str = "cohort.csv";
pub const BREAKDOWN_FILE: &str = "external.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub density: f64,
    pub count: usize,
    pub master_seed: u64,
    pub ipf: IpfSettings,
}

impl EnsembleSettings {
    pub fn new(density: f64, count: usize, master_seed: u64) -> Self {
        EnsembleSettings {
            density,
            count,
            master_seed,
            ipf: IpfSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberDiagnostics {
    pub index: usize,
    pub seed: u64,
    pub attempts: usize,
    pub links: usize,
    pub fit: FitDiagnostics,
}

#[derive(Debug, Clone)]
pub struct NetworkEnsemble {
    pub model: ReconstructionModel,
    pub settings: EnsembleSettings,
    pub members: Vec<ExposureMatrix>,
    pub diagnostics: Vec<MemberDiagnostics>,
}

impl NetworkEnsemble {
    pub fn converged_fraction(&self) -> f64 {
        let ok = self.diagnostics.iter().filter(|d| d.fit.converged).count();
        ok as f64 / self.diagnostics.len().max(1) as f64
    }

    pub fn mean_links(&self) -> f64 {
        let total: usize = self.diagnostics.iter().map(|d| d.links).sum();
        total as f64 / self.diagnostics.len().max(1) as f64
    }
}

/// First bank whose positive propensity is left without a matching link.
fn unreachable_bank(adj: &Adjacency, lending: &[f64], borrowing: &[f64]) -> Option<usize> {
    let out = adj.out_degrees();
    let inn = adj.in_degrees();
    (0..adj.len())
        .find(|&i| (lending[i] > 0.0 && out[i] == 0) || (borrowing[i] > 0.0 && inn[i] == 0))
}

/// Member seed for slot `index`.
pub fn member_seed(master_seed: u64, index: usize) -> u64 {
    seed::derive(master_seed, &format!("member/{index}"))
}

/// Calibrates the fitness model once and draws `count` exposure matrices.
/// Members are independent and generated in parallel; each one's randomness
/// comes only from its own derived seed.
pub fn generate_ensemble(cohort: &Cohort, settings: EnsembleSettings) -> Result<NetworkEnsemble> {
    let model = ReconstructionModel::calibrate(cohort, settings.density)?;
    let lending = &model.rebalanced.lending;
    let borrowing = &model.rebalanced.borrowing;

    let results: Vec<Result<(ExposureMatrix, MemberDiagnostics)>> = (0..settings.count)
        .into_par_iter()
        .map(|index| {
            let base = member_seed(settings.master_seed, index);
            let mut last_bad = 0;
            for attempt in 0..MAX_RESAMPLES {
                let s = seed::derive(base, &format!("attempt/{attempt}"));
                let adj = sample_adjacency(&model, s);
                if let Some(bad) = unreachable_bank(&adj, lending, borrowing) {
                    last_bad = bad;
                    continue;
                }
                let (matrix, fit) = fit_weights(
                    &adj,
                    lending,
                    borrowing,
                    model.rebalanced.total_volume,
                    settings.ipf,
                );
                let diag = MemberDiagnostics {
                    index,
                    seed: s,
                    attempts: attempt + 1,
                    links: adj.link_count(),
                    fit,
                };
                return Ok((matrix, diag));
            }
            Err(Error::Unreachable {
                member: index,
                bank_id: cohort.bank(last_bad).bank_id.clone(),
                attempts: MAX_RESAMPLES,
            })
        })
        .collect();

    let mut members = Vec::with_capacity(settings.count);
    let mut diagnostics = Vec::with_capacity(settings.count);
    for r in results {
        let (m, d) = r?;
        members.push(m);
        diagnostics.push(d);
    }
    Ok(NetworkEnsemble {
        model,
        settings,
        members,
        diagnostics,
    })
}

/// Sidecar describing a persisted ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub master_seed: u64,
    pub density: f64,
    pub z: f64,
    pub target_links: f64,
    pub expected_links: f64,
    pub total_volume: f64,
    pub ipf: IpfSettings,
    pub banks: usize,
    pub networks: Vec<String>,
    pub diagnostics: Vec<MemberDiagnostics>,
    pub cohort_file: String,
    pub breakdown_file: Option<String>,
    /// Free-form run metadata supplied by the caller.
    #[serde(default)]
    pub run: serde_json::Value,
}

pub fn network_file_name(index: usize) -> String {
    format!("network_{index:03}.csv")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes one sparse triplet CSV per member, the cohort, and a manifest.
pub fn save_ensemble(
    dir: &Path,
    cohort: &Cohort,
    ensemble: &NetworkEnsemble,
    run: serde_json::Value,
) -> Result<EnsembleManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut networks = Vec::with_capacity(ensemble.members.len());
    for (index, member) in ensemble.members.iter().enumerate() {
        let name = network_file_name(index);
        let path = dir.join(&name);
        let mut buf = Vec::new();
        writeln!(buf, "lender_id,borrower_id,amount").expect("write to vec");
        for (i, j, v) in member.triplets() {
            writeln!(
                buf,
                "{},{},{}",
                csv_field(&cohort.bank(i).bank_id),
                csv_field(&cohort.bank(j).bank_id),
                v
            )
            .expect("write to vec");
        }
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        networks.push(name);
    }
    write_cohort_csv(cohort, &dir.join(COHORT_FILE))?;
    let breakdown =
        write_breakdown_csv(cohort, &dir.join(BREAKDOWN_FILE))?.then(|| BREAKDOWN_FILE.to_string());

    let manifest = EnsembleManifest {
        master_seed: ensemble.settings.master_seed,
        density: ensemble.settings.density,
        z: ensemble.model.z,
        target_links: ensemble.model.target_links,
        expected_links: ensemble.model.expected_links(),
        total_volume: ensemble.model.rebalanced.total_volume,
        ipf: ensemble.settings.ipf,
        banks: cohort.len(),
        networks,
        diagnostics: ensemble.diagnostics.clone(),
        cohort_file: COHORT_FILE.into(),
        breakdown_file: breakdown,
        run,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// A persisted ensemble read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedEnsemble {
    pub dir: PathBuf,
    pub manifest: EnsembleManifest,
    pub cohort: Cohort,
    pub members: Vec<ExposureMatrix>,
}

#[derive(Debug, Deserialize)]
struct Triplet {
    lender_id: String,
    borrower_id: String,
    amount: f64,
}

pub fn load_ensemble(dir: &Path) -> Result<LoadedEnsemble> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: EnsembleManifest = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: manifest_path.clone(),
        source: e,
    })?;
    let mut cohort = ingest_cohort(&dir.join(&manifest.cohort_file), None)?.cohort;
    if let Some(b) = &manifest.breakdown_file {
        let ids = cohort.ids().map(String::from).collect();
        cohort = attach_breakdown(cohort, &dir.join(b), &ids)?;
    }
    let n = cohort.len();
    let mut members = Vec::with_capacity(manifest.networks.len());
    for name in &manifest.networks {
        let path = dir.join(name);
        let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let mut triplets = Vec::new();
        for row in reader.deserialize::<Triplet>() {
            let row = row.map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let lookup = |id: &str| {
                cohort.position(id).ok_or_else(|| Error::Validation {
                    bank_id: id.to_string(),
                    message: format!("unknown bank in {}", path.display()),
                })
            };
            triplets.push((
                lookup(&row.lender_id)?,
                lookup(&row.borrower_id)?,
                row.amount,
            ));
        }
        members.push(ExposureMatrix::from_triplets(n, &triplets)?);
    }
    Ok(LoadedEnsemble {
        dir: dir.to_path_buf(),
        manifest,
        cohort,
        members,
    })
}
