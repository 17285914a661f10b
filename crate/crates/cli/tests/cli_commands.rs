use std::path::Path;
use std::process::{Command, Output};

const TWO_BANKS: &str =
    "bank_id,name,period,equity,total_assets,interbank_assets,interbank_liabilities
A,Alpha,2013,10,100,20,0
B,Beta,2013,10,100,0,20
";

fn debtstress(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_debtstress"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) {
    let out = debtstress(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn two_bank_networks(dir: &Path) {
    std::fs::write(dir.join("cohort.csv"), TWO_BANKS).unwrap();
    ok(
        dir,
        &[
            "reconstruct",
            "--input",
            "cohort.csv",
            "--samples",
            "1",
            "--density",
            "0.45",
            "--seed",
            "1",
            "--out",
            "nets",
        ],
    );
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = debtstress(
        dir.path(),
        &["reconstruct", "--input", "absent.csv", "--out", "nets"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = debtstress(
        dir.path(),
        &["stress", "--networks", "absent", "--out", "res"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn two_banks_give_the_forced_network() {
    let dir = tempfile::tempdir().unwrap();
    two_bank_networks(dir.path());
    assert_eq!(
        read(dir.path(), "nets/network_000.csv"),
        "lender_id,borrower_id,amount\nA,B,20\n"
    );
    assert!(!dir.path().join("nets/network_001.csv").exists());
}

#[test]
fn zero_price_impact_leaves_third_round_empty() {
    let dir = tempfile::tempdir().unwrap();
    two_bank_networks(dir.path());
    ok(
        dir.path(),
        &[
            "stress",
            "--networks",
            "nets",
            "--shock",
            "fixed:0.01",
            "--eta",
            "0",
            "--out",
            "res",
        ],
    );
    let decomposition = read(dir.path(), "res/decomposition.csv");
    let row: Vec<f64> = decomposition
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    // first 0.09 = (0.08 + 0.1) / 2, second adds 2 * 0.1 / 2 for the lender
    assert!((row[3] - 0.09).abs() < 1e-12);
    assert!((row[4] - 0.1).abs() < 1e-12);
    assert_eq!(row[5], 0.0);
    assert!((row[6] - 0.19).abs() < 1e-12);
}

#[test]
fn bad_arguments_exit_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    two_bank_networks(dir.path());
    let out = debtstress(
        dir.path(),
        &[
            "stress",
            "--networks",
            "nets",
            "--shock",
            "fixed:0.01",
            "--dynamics",
            "foo",
            "--out",
            "res",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    ok(
        dir.path(),
        &[
            "stress",
            "--networks",
            "nets",
            "--shock",
            "fixed:0.01",
            "--out",
            "res",
        ],
    );
    let out = debtstress(
        dir.path(),
        &[
            "report",
            "--results",
            "res",
            "--alpha",
            "1.5",
            "--out",
            "rep",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = debtstress(
        dir.path(),
        &[
            "stress",
            "--networks",
            "nets",
            "--shock",
            "fixed:2",
            "--out",
            "res2",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_values_apply_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cohort.csv"), TWO_BANKS).unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"samples": 3, "density": 0.45}"#,
    )
    .unwrap();
    ok(
        dir.path(),
        &[
            "--config",
            "run.json",
            "reconstruct",
            "--input",
            "cohort.csv",
            "--out",
            "a",
        ],
    );
    assert!(dir.path().join("a/network_002.csv").exists());
    assert!(!dir.path().join("a/network_003.csv").exists());
    ok(
        dir.path(),
        &[
            "--config",
            "run.json",
            "reconstruct",
            "--input",
            "cohort.csv",
            "--samples",
            "2",
            "--out",
            "b",
        ],
    );
    assert!(dir.path().join("b/network_001.csv").exists());
    assert!(!dir.path().join("b/network_002.csv").exists());

    std::fs::write(dir.path().join("bad.json"), r#"{"sample": 3}"#).unwrap();
    let out = debtstress(
        dir.path(),
        &[
            "--config",
            "bad.json",
            "reconstruct",
            "--input",
            "cohort.csv",
            "--out",
            "c",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_over_one_run_echoes_it() {
    let dir = tempfile::tempdir().unwrap();
    two_bank_networks(dir.path());
    ok(
        dir.path(),
        &[
            "stress",
            "--networks",
            "nets",
            "--shock",
            "fixed:0.01",
            "--eta",
            "0",
            "--out",
            "res",
        ],
    );
    ok(
        dir.path(),
        &[
            "report",
            "--results",
            "res",
            "--alpha",
            "0.95",
            "--out",
            "rep",
        ],
    );
    let global = read(dir.path(), "rep/global_risk.csv");
    let rows: Vec<Vec<&str>> = global
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for (row, h) in rows.iter().zip([0.09, 0.19, 0.19]) {
        for v in &row[3..6] {
            assert!((v.parse::<f64>().unwrap() - h).abs() < 1e-12, "{row:?}");
        }
    }
}

#[test]
fn synthesize_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "synthesize",
            "--banks",
            "30",
            "--seed",
            "4",
            "--out",
            "a.csv",
        ],
    );
    ok(
        dir.path(),
        &[
            "synthesize",
            "--banks",
            "30",
            "--seed",
            "4",
            "--out",
            "b.csv",
        ],
    );
    assert_eq!(read(dir.path(), "a.csv"), read(dir.path(), "b.csv"));
    assert_eq!(read(dir.path(), "a.csv").lines().count(), 31);
}
