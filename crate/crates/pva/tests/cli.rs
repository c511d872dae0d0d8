use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pva(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pva"))
        .args(args)
        .env_remove("PVA_DATA_DIR")
        .output()
        .expect("run pva")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/experiment_rounds.jsonl")
}

#[test]
fn solve_prints_trajectory() {
    let text = stdout(&pva(&["solve", "--pi", "12", "--nu", "5", "--alpha", "2", "--workers", "6"]));
    assert!(text.contains("trajectory\tPPVVVV"), "{text}");
    assert!(text.contains("vote_states\t[2]"), "{text}");
}

#[test]
fn tune_round_trips_through_solve() {
    let text = stdout(&pva(&["tune", "--m", "3", "--alpha", "4"]));
    let row: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
    let solved = stdout(&pva(&["solve", "--pi", row[0], "--nu", row[1], "--alpha", row[2], "--workers", "5"]));
    assert!(solved.contains("trajectory\tPPPVV"), "{solved}");
}

#[test]
fn tune_rejects_unit_alpha() {
    let out = pva(&["tune", "--m", "3", "--alpha", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn compare_reports_agreement() {
    let text = stdout(&pva(&["compare", "--pi", "20", "--nu", "4", "--alpha", "2"]));
    assert!(text.contains("reachable agreement  yes"), "{text}");
}

#[test]
fn oracle_finite_horizon() {
    let text = stdout(&pva(&["oracle", "--pi", "5", "--nu", "12", "--alpha", "2", "--horizon", "3"]));
    assert!(text.lines().last().unwrap().ends_with("PVV"), "{text}");
}

#[test]
fn simulate_writes_a_loadable_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("round.jsonl");
    let log_arg = log.to_str().unwrap();
    let args = ["simulate", "--pi", "12", "--nu", "5", "--alpha", "2", "--population", "freeloader=1", "--workers", "8"];
    stdout(&pva(&[&args[..], &["--out", log_arg]].concat()));
    let logs = pva::load_logs(&log).unwrap();
    assert_eq!(logs.len(), 1);
    assert_eq!(logs[0].proposals(), 2);
    assert_eq!(logs[0].votes(), 6);

    // standard output carries the same log
    let piped = stdout(&pva(&args));
    assert_eq!(piped, std::fs::read_to_string(&log).unwrap());
}

#[test]
fn sweep_writes_table_and_logs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    stdout(&pva(&["sweep", "--grid", "8,8,2;5,12,2", "--trials", "4", "--out", out]));
    let table = std::fs::read_to_string(dir.path().join("sweep.tsv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    let logs = pva::load_logs(&dir.path().join("logs")).unwrap();
    assert_eq!(logs.len(), 8);
}

#[test]
fn analyze_fixture_warns_and_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let out = pva(&["analyze", fixture().to_str().unwrap(), "--out", json.to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.contains("total\t\t\t25\t375\t464\t89"), "{text}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("(pi=5, nu=12, alpha=2): 49 actions"), "{stderr}");
    assert!(stderr.contains("(pi=4, nu=20, alpha=2): 92 actions"), "{stderr}");

    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report["overvotes"]["totals"]["overvotes"], 89);
    assert_eq!(report["warnings"].as_array().unwrap().len(), 2);
}

#[test]
fn analyze_missing_path_fails() {
    let out = pva(&["analyze", "/definitely/not/here"]);
    assert!(!out.status.success());
}

#[test]
fn bad_arguments_fail() {
    assert!(!pva(&["solve", "--pi", "-3", "--nu", "1", "--alpha", "1"]).status.success());
    assert!(!pva(&["simulate", "--pi", "1", "--nu", "1", "--alpha", "1", "--population", "nobody=1"]).status.success());
    assert!(!pva(&["sweep", "--grid", "1,2"]).status.success());
}
