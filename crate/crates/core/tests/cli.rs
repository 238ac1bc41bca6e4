use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn mprism(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mprism")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn all_safe_scenario_prints_safe_rows() {
    let input = data("fixtures/all_safe.json");
    let out = mprism(&["eval-scenario", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,tau,dominant,safe"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r.ends_with(",1,,true")), "{text}");
}

#[test]
fn coincident_snapshot_reports_zero() {
    let input = data("fixtures/coincident.json");
    let out = mprism(&["eval-snapshot", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.lines().any(|l| l == "tau=0"), "{text}");
    assert!(text.lines().any(|l| l == "dominant=twin"));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"frames": [{"t": 0, "sv": {"id": "sv", "kind": "vehicle", "p": 0}}]}"#).unwrap();
    let out = mprism(&["eval-scenario", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("frame 0"));

    let out = mprism(&["eval-scenario", "--input", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let profiles = dir.path().join("profiles.toml");
    std::fs::write(&profiles, "[[profile]]\nid = \"x\"\n").unwrap();
    let input = data("fixtures/coincident.json");
    let out = mprism(&["eval-snapshot", "--input", input.to_str().unwrap(), "--profile-file", profiles.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = mprism(&["eval-snapshot", "--input", input.to_str().unwrap(), "--radius=0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rows_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for workers in ["1", "4"] {
        let path = dir.path().join(format!("rows{workers}.csv"));
        let out = mprism(&["sweep", "--template", "lead-following", "--workers", workers, "--output", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        files.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(String::from_utf8_lossy(&files[0]).lines().count(), 57);
}

#[test]
fn overrides_are_echoed_in_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let input = data("fixtures/all_safe.json");
    let profiles = data("profiles.toml");
    let out = mprism(&[
        "eval-scenario",
        "--input",
        input.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
        "--radius",
        "3.5",
        "--delta",
        "0.05",
        "--horizon",
        "12",
        "--lambda",
        "1e-6",
        "--workers",
        "2",
        "--seed",
        "7",
        "--bnb-ms",
        "20",
        "--momentum",
        "--profile-file",
        profiles.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    let p = &doc["params"];
    assert_eq!(p["radius"], 3.5);
    assert_eq!(p["delta"], 0.05);
    assert_eq!(p["horizon"], 12);
    assert_eq!(p["lambda"], 1e-6);
    assert_eq!(p["workers"], 2);
    assert_eq!(p["seed"], 7);
    assert_eq!(p["bnb_ms"], 20.0);
    assert_eq!(p["momentum"], true);
    assert_eq!(doc["min_tau"], 12.0 * 0.05);
}

#[test]
fn bench_prints_one_row_per_agent_count() {
    let out = mprism(&["bench", "--agents", "1,2", "--snapshots", "2", "--workers", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "agents,workers,snapshots,seconds,snapshots_per_second");
    assert!(lines.len() >= 3);
}
