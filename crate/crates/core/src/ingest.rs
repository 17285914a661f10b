//! CSV input and output for balance-sheet cohorts.
//!
//! Main file header: `bank_id,name,period,equity,total_assets,interbank_assets,interbank_liabilities`.
//! Empty numeric cells are missing values and go through gap filling.
//! Optional breakdown file header: `bank_id,asset_class,amount`.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BankRecord, Cohort, Violation};
use crate::series::{preprocess_series, Rejection, SeriesRecord};

pub const COHORT_HEADER: [&str; 7] = [
    "bank_id",
    "name",
    "period",
    "equity",
    "total_assets",
    "interbank_assets",
    "interbank_liabilities",
];

#[derive(Debug, Deserialize)]
struct Row {
    bank_id: String,
    name: String,
    period: i32,
    equity: Option<f64>,
    total_assets: Option<f64>,
    interbank_assets: Option<f64>,
    interbank_liabilities: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct BreakdownRow {
    bank_id: String,
    asset_class: String,
    amount: f64,
}

/// A cohort together with every record that was left out of it.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub cohort: Cohort,
    pub period: i32,
    pub rejections: Vec<Rejection>,
    /// Records for the chosen period that carry imputed interbank values.
    pub imputed: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectionReport<'a> {
    pub period: i32,
    pub rejections: &'a [Rejection],
    pub imputed: &'a [String],
}

fn parse_error(path: &Path, err: &csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    let message = match err.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => err.to_string(),
    };
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn check_header(
    path: &Path,
    reader: &mut csv::Reader<std::fs::File>,
    expected: &[&str],
) -> Result<()> {
    let header = reader.headers().map_err(|e| parse_error(path, &e))?;
    let found: Vec<&str> = header.iter().collect();
    if found != expected {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.join(",")
            ),
        });
    }
    Ok(())
}

/// Reads every bank-year in a cohort file.
pub fn read_series(path: &Path) -> Result<Vec<SeriesRecord>> {
    let mut reader = open_reader(path)?;
    check_header(path, &mut reader, &COHORT_HEADER)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| parse_error(path, &e))?;
        if row.bank_id.is_empty() {
            return Err(Error::Validation {
                bank_id: String::new(),
                message: format!("empty bank_id in period {}", row.period),
            });
        }
        if !seen.insert((row.bank_id.clone(), row.period)) {
            return Err(Error::DuplicateBank(row.bank_id));
        }
        let fields = [
            ("equity", row.equity),
            ("total_assets", row.total_assets),
            ("interbank_assets", row.interbank_assets),
            ("interbank_liabilities", row.interbank_liabilities),
        ];
        for (name, value) in fields {
            if let Some(v) = value {
                if v < 0.0 || !v.is_finite() {
                    return Err(Error::Validation {
                        bank_id: row.bank_id,
                        message: format!("{name} must be a non-negative number, got {v}"),
                    });
                }
            }
        }
        out.push(SeriesRecord {
            bank_id: row.bank_id,
            name: row.name,
            period: row.period,
            equity: row.equity,
            total_assets: row.total_assets,
            interbank_assets: row.interbank_assets,
            interbank_liabilities: row.interbank_liabilities,
            imputed_assets: false,
            imputed_liabilities: false,
        });
    }
    Ok(out)
}

/// Loads and validates one period of a cohort file. `period = None` selects
/// the latest period present.
pub fn ingest_cohort(path: &Path, period: Option<i32>) -> Result<Ingested> {
    let series = read_series(path)?;
    build_cohort(series, period)
}

/// Gap-fills a multi-year series and validates the chosen period.
pub fn build_cohort(series: Vec<SeriesRecord>, period: Option<i32>) -> Result<Ingested> {
    let period = match period {
        Some(p) => p,
        None => series
            .iter()
            .map(|r| r.period)
            .max()
            .ok_or_else(|| Error::invalid("cohort file has no records"))?,
    };
    let (filled, mut rejections) = preprocess_series(&series);
    let excluded: HashSet<String> = rejections.iter().map(|r| r.bank_id.clone()).collect();

    let mut banks = Vec::new();
    let mut imputed = Vec::new();
    for rec in filled.into_iter().filter(|r| r.period == period) {
        if excluded.contains(&rec.bank_id) {
            continue;
        }
        let reject = |reason: String| Rejection {
            bank_id: rec.bank_id.clone(),
            period: Some(period),
            reason,
        };
        let (Some(equity), Some(total), Some(ib_a), Some(ib_l)) = (
            rec.equity,
            rec.total_assets,
            rec.interbank_assets,
            rec.interbank_liabilities,
        ) else {
            rejections.push(reject("missing values after gap filling".into()));
            continue;
        };
        let bank = BankRecord::from_aggregates(
            rec.bank_id.clone(),
            rec.name.clone(),
            rec.period,
            equity,
            total,
            ib_a,
            ib_l,
        );
        let violations = bank.violations();
        if let Some(hard) = violations.iter().find(|v| {
            matches!(
                v,
                Violation::NegativeValue(_) | Violation::AssetIdentity { .. }
            )
        }) {
            return Err(Error::Validation {
                bank_id: bank.bank_id,
                message: hard.to_string(),
            });
        }
        if !violations.is_empty() {
            let reason = violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            rejections.push(reject(reason));
            continue;
        }
        if rec.imputed_assets || rec.imputed_liabilities {
            imputed.push(bank.bank_id.clone());
        }
        banks.push(bank);
    }
    if banks.is_empty() {
        return Err(Error::invalid(format!(
            "no admissible banks in period {period}"
        )));
    }
    Ok(Ingested {
        cohort: Cohort::new(banks)?,
        period,
        rejections,
        imputed,
    })
}

/// Attaches an external-asset breakdown file to a cohort. Rows for banks
/// that were rejected are skipped; ids never seen in `known_ids` are an error.
pub fn attach_breakdown(
    cohort: Cohort,
    path: &Path,
    known_ids: &HashSet<String>,
) -> Result<Cohort> {
    let mut reader = open_reader(path)?;
    check_header(path, &mut reader, &["bank_id", "asset_class", "amount"])?;
    let mut classes: Vec<String> = Vec::new();
    let mut amounts: HashMap<(usize, usize), f64> = HashMap::new();
    for row in reader.deserialize::<BreakdownRow>() {
        let row = row.map_err(|e| parse_error(path, &e))?;
        if !(row.amount >= 0.0) {
            return Err(Error::Validation {
                bank_id: row.bank_id,
                message: format!("negative holding in asset class `{}`", row.asset_class),
            });
        }
        let Some(pos) = cohort.position(&row.bank_id) else {
            if known_ids.contains(&row.bank_id) {
                continue;
            }
            return Err(Error::Validation {
                bank_id: row.bank_id,
                message: "bank in breakdown file is not in the cohort file".into(),
            });
        };
        let k = match classes.iter().position(|c| *c == row.asset_class) {
            Some(k) => k,
            None => {
                classes.push(row.asset_class.clone());
                classes.len() - 1
            }
        };
        *amounts.entry((pos, k)).or_insert(0.0) += row.amount;
    }
    let m = classes.len();
    let mut holdings = vec![0.0; cohort.len() * m];
    for ((i, k), v) in amounts {
        holdings[i * m + k] = v;
    }
    cohort.with_breakdown(classes, holdings)
}

/// Writes a cohort in the input schema so it can be read back verbatim.
pub fn write_cohort_csv(cohort: &Cohort, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{}", COHORT_HEADER.join(",")).expect("write to vec");
    for b in cohort.banks() {
        writeln!(
            buf,
            "{},{},{},{},{},{},{}",
            csv_field(&b.bank_id),
            csv_field(&b.name),
            b.period,
            b.equity,
            b.total_assets,
            b.interbank_assets,
            b.interbank_liabilities
        )
        .expect("write to vec");
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes the external-asset breakdown, if the cohort has one.
pub fn write_breakdown_csv(cohort: &Cohort, path: &Path) -> Result<bool> {
    let Some(holdings) = cohort.holdings() else {
        return Ok(false);
    };
    let classes = cohort.asset_classes();
    let m = classes.len();
    let mut buf = Vec::new();
    writeln!(buf, "bank_id,asset_class,amount").expect("write to vec");
    for (i, b) in cohort.banks().iter().enumerate() {
        for (k, class) in classes.iter().enumerate() {
            writeln!(
                buf,
                "{},{},{}",
                csv_field(&b.bank_id),
                csv_field(class),
                holdings[i * m + k]
            )
            .expect("write to vec");
        }
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))?;
    Ok(true)
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    const HEADER: &str =
        "bank_id,name,period,equity,total_assets,interbank_assets,interbank_liabilities\n";

    #[test]
    fn three_bank_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "b.csv",
            &format!("{HEADER}a,Alpha,2010,10,100,20,15\nb,Beta,2010,5,50,5,10\nc,\"Gamma, Inc\",2010,8,80,10,12\n"),
        );
        let got = ingest_cohort(&p, Some(2010)).unwrap();
        assert_eq!(got.cohort.len(), 3);
        assert_eq!(got.cohort.bank(2).name, "Gamma, Inc");
        assert!(got.rejections.is_empty());
    }

    #[test]
    fn zero_equity_is_flagged_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "b.csv",
            &format!("{HEADER}a,A,2010,10,100,20,15\nb,B,2010,0,50,5,10\n"),
        );
        let got = ingest_cohort(&p, None).unwrap();
        assert_eq!(got.cohort.len(), 1);
        assert_eq!(got.rejections.len(), 1);
        assert_eq!(got.rejections[0].bank_id, "b");
    }

    #[test]
    fn malformed_number_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "b.csv",
            &format!("{HEADER}a,A,2010,10,100,20,15\nb,B,2010,x,50,5,10\n"),
        );
        match ingest_cohort(&p, None).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_negative_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "d.csv",
            &format!("{HEADER}a,A,2010,10,100,20,15\na,A,2010,10,100,20,15\n"),
        );
        assert!(matches!(
            ingest_cohort(&p, None).unwrap_err(),
            Error::DuplicateBank(_)
        ));
        let p = write(&dir, "n.csv", &format!("{HEADER}a,A,2010,10,-100,20,15\n"));
        assert!(matches!(
            ingest_cohort(&p, None).unwrap_err(),
            Error::Validation { .. }
        ));
    }

    #[test]
    fn interbank_above_total_names_bank() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "b.csv",
            &format!("{HEADER}a,A,2010,10,100,20,15\nzz,Z,2010,1,10,20,1\n"),
        );
        match ingest_cohort(&p, None).unwrap_err() {
            Error::Validation { bank_id, .. } => assert_eq!(bank_id, "zz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn breakdown_identity_violation_names_bank() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "b.csv",
            &format!("{HEADER}a,A,2010,10,100,20,15\nb,B,2010,5,50,5,10\n"),
        );
        let got = ingest_cohort(&p, None).unwrap();
        let known: HashSet<String> = ["a".into(), "b".into()].into();
        let good = write(
            &dir,
            "e.csv",
            "bank_id,asset_class,amount\na,gov,30\na,corp,50\nb,gov,45\n",
        );
        let c = attach_breakdown(got.cohort.clone(), &good, &known).unwrap();
        assert_eq!(c.asset_classes(), &["gov".to_string(), "corp".to_string()]);
        let bad = write(
            &dir,
            "f.csv",
            "bank_id,asset_class,amount\na,gov,30\na,corp,50\nb,gov,40\n",
        );
        match attach_breakdown(got.cohort, &bad, &known).unwrap_err() {
            Error::Validation { bank_id, .. } => assert_eq!(bank_id, "b"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_cells_are_interpolated() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "b.csv",
            &format!(
                "{HEADER}a,A,2008,10,1000,100,90\na,A,2009,10,1000,,90\na,A,2010,10,1000,200,90\n"
            ),
        );
        let got = ingest_cohort(&p, Some(2009)).unwrap();
        assert_eq!(got.cohort.bank(0).interbank_assets, 150.0);
        assert_eq!(got.imputed, vec!["a".to_string()]);
    }

    #[test]
    fn write_then_read_back() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            &dir,
            "b.csv",
            &format!("{HEADER}a,A,2010,10.25,100.5,20.125,15\nb,B,2010,5,50,5,10\n"),
        );
        let got = ingest_cohort(&p, None).unwrap();
        let q = dir.path().join("out.csv");
        write_cohort_csv(&got.cohort, &q).unwrap();
        let back = ingest_cohort(&q, None).unwrap();
        assert_eq!(back.cohort, got.cohort);
    }
}
