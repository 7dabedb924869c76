use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn arqkey(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arqkey"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Parses CSV output into its metadata and rows of named cells.
fn csv(text: &str) -> (Value, Vec<std::collections::HashMap<String, String>>) {
    let mut lines = text.lines();
    let meta = serde_json::from_str(lines.next().unwrap().strip_prefix("# ").unwrap()).unwrap();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(String::from))
                .collect()
        })
        .collect();
    (meta, rows)
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["bogus"],
        vec!["capacity", "--snr-db", "x"],
        vec!["capacity", "--snr-db", "nan"],
        vec!["fec", "--trials", "9999"],
        vec!["fec", "--genie", "sideways"],
        vec!["simulate", "--exchanges", "0"],
        vec!["simulate", "--r0", "-1"],
        vec!["replay"],
        vec!["outage", "--format", "xml"],
    ] {
        assert_eq!(code(&arqkey(dir.path(), &args)), 2, "{args:?}");
    }
    assert_eq!(code(&arqkey(dir.path(), &["--help"])), 0);
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = arqkey(dir.path(), &["outage", "--out", "missing/dir/x.csv"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing/dir/x.csv"));
    assert_eq!(
        code(&arqkey(dir.path(), &["replay", "--trace", "absent.trace"])),
        3
    );
    assert_eq!(
        code(&arqkey(
            dir.path(),
            &["capacity", "--config", "absent.conf"]
        )),
        3
    );
    std::fs::write(dir.path().join("junk.trace"), "not a trace\n").unwrap();
    assert_eq!(
        code(&arqkey(dir.path(), &["replay", "--trace", "junk.trace"])),
        3
    );
}

#[test]
fn no_completed_exchange_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = arqkey(
        dir.path(),
        &[
            "simulate",
            "--snr-db",
            "-30",
            "--exchanges",
            "5",
            "--max-frames",
            "20",
        ],
    );
    assert_eq!(code(&o), 4);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["counts"]["incomplete"], 5);
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("a.conf"),
        "# test\nr0 = 5\nsnr_db = 20\nseed = 9\n",
    )
    .unwrap();
    let (meta, rows) = csv(&stdout(&arqkey(
        dir.path(),
        &["outage", "--config", "a.conf", "--r0", "6"],
    )));
    assert_eq!(meta["config"]["r0"], serde_json::json!([6.0]));
    assert_eq!(meta["config"]["snr_db"], 20.0);
    assert_eq!(meta["config"]["target"], 1e-6);
    assert_eq!(meta["seed"], 9);
    assert!(rows
        .iter()
        .all(|r| r["r0"] == "6.0" && r["snr_db"] == "20.0"));

    std::fs::write(dir.path().join("b.conf"), "r0 = 5\ntypo = 1\n").unwrap();
    let o = arqkey(dir.path(), &["outage", "--config", "b.conf"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("typo"));
}

#[test]
fn capacity_table_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let (_, rows) = csv(&stdout(&arqkey(
        dir.path(),
        &["capacity", "--snr-db", "0:10:40"],
    )));
    assert_eq!(rows.len(), 15);
    let at = |rc: &'static str| rows.iter().filter(move |r| r["rc"] == rc);
    let cs: Vec<f64> = at("0.0").map(|r| num(r, "cs")).collect();
    assert!(cs.windows(2).all(|w| w[1] >= w[0]), "{cs:?}");
    assert!(at("0.0").any(|r| num(r, "ce") > num(r, "cs")));
    for (a, b) in at("0.0").zip(at("7.0")) {
        assert!(num(b, "ce") <= num(a, "ce"));
    }
}

#[test]
fn outage_flags_infeasible_rates_and_stops_at_target() {
    let dir = tempfile::tempdir().unwrap();
    let (_, rows) = csv(&stdout(&arqkey(
        dir.path(),
        &["outage", "--r0", "2,4", "--rc", "3"],
    )));
    let infeasible: Vec<_> = rows.iter().filter(|r| r["r0"] == "2.0").collect();
    assert!(!infeasible.is_empty() && infeasible.iter().all(|r| r["feasible"] == "false"));
    let (_, rows) = csv(&stdout(&arqkey(dir.path(), &["outage", "--target", "1"])));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r["k"] == "1"));
}

#[test]
fn simulate_defaults_agree_with_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let o = arqkey(dir.path(), &["simulate", "--check"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for r in v["records"].as_array().unwrap() {
        assert!(r["z_score"].as_f64().unwrap().abs() <= 3.0, "{r}");
    }
    assert_eq!(v["counts"]["key_mismatches"], 0);
}

#[test]
fn trace_replays_to_the_same_statistics_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let sim = arqkey(
        dir.path(),
        &[
            "simulate",
            "--exchanges",
            "500",
            "--payload-bits",
            "6",
            "--trace",
            "t.trace",
            "--format",
            "csv",
        ],
    );
    assert_eq!(code(&sim), 0);
    let rep = arqkey(
        dir.path(),
        &["replay", "--trace", "t.trace", "--format", "csv"],
    );
    assert_eq!(code(&rep), 0);
    let body = |s: String| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(stdout(&sim)), body(stdout(&rep)));

    let text = std::fs::read_to_string(dir.path().join("t.trace")).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let i = lines.iter().position(|l| l.starts_with("0,")).unwrap();
    let mut cells: Vec<String> = lines[i].split(',').map(String::from).collect();
    cells[1] = "0.000001".into();
    lines[i] = cells.join(",");
    std::fs::write(dir.path().join("bad.trace"), lines.join("\n") + "\n").unwrap();
    let o = arqkey(dir.path(), &["replay", "--trace", "bad.trace"]);
    assert_eq!(code(&o), 5);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(
        v["threshold_check"]["inconsistent_frames"]
            .as_u64()
            .unwrap()
            >= 1
    );
}

#[test]
fn fec_writes_flagged_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = arqkey(
        dir.path(),
        &[
            "fec",
            "--schemes",
            "uncoded-bpsk-240",
            "--snr-db",
            "-20,60",
            "--out",
            "f.csv",
        ],
    );
    assert_eq!(code(&o), 0);
    let (meta, rows) = csv(&std::fs::read_to_string(dir.path().join("f.csv")).unwrap());
    assert_eq!(meta["config"]["trials"], 10000);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["infeasible"], "true");
    assert_eq!(rows[1]["k_star"], "");
    assert_eq!(rows[0]["infeasible"], "false");
}
